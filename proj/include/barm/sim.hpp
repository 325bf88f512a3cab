#pragma once

// Quasi-static pick-and-place world: objects rest on supports, the gripper
// picks the top object at a column and releases it onto whatever lies below.

#include "barm/config.hpp"
#include "barm/geometry.hpp"
#include "barm/rng.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace barm {

enum class Category : std::uint8_t {
    Block,
    Roof,
    Triangle,
    Brick,
    Random,
    Box,
    Bottle,
    Swab,
    Tube,
    UsedTube,
    Container,
    Pallet,
};

std::string_view category_name(Category c);

struct SimObject {
    int id = 0;
    Shape shape;
    Pose pose;
    Category category = Category::Block;
    bool movable = true;
    bool in_play = true;

    double base() const { return base_z(shape, pose); }
    double top() const { return top_z(shape, pose); }
    Vec2 com() const { return center_of_mass(shape, pose); }
};

enum class Primitive : std::uint8_t { Pick = 0, Place = 1 };

// Object pose expressed in the gripper frame at grasp time.
struct GraspTransform {
    double dx = 0.0;
    double dy = 0.0;
    double dz = 0.0;
    double dyaw = 0.0;
};

struct Held {
    int object_id = -1;
    GraspTransform grasp;
};

struct GripperState {
    std::optional<Held> holding;
    double max_open_width = 0.08;

    bool is_holding() const { return holding.has_value(); }
};

struct SimParams {
    Workspace workspace;
    bool half_rotation = true;
    double z_pick_offset = -0.015;
    double z_place_clear = 0.002;
    double z_region_half_width = 0.012;
    double grasp_tolerance = 0.01;
    double support_tolerance = 0.003;
    double settle_tolerance = 1e-6;
    double topple_step = 0.01;
};

struct WorldState {
    std::vector<SimObject> objects;
    GripperState gripper;
    Rng rng;
    int step_count = 0;
    std::uint64_t episode_seed = 0;
    SimParams params;
    int next_id = 0;

    const SimObject* find(int id) const;
    SimObject* find(int id);
    const SimObject& get(int id) const;
    SimObject& get(int id);
    bool is_held(int id) const { return gripper.holding && gripper.holding->object_id == id; }

    int add_object(Shape shape, Pose pose, Category category, bool movable = true);
    void remove_object(int id);
};

struct Action {
    Primitive primitive = Primitive::Pick;
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;
    std::optional<double> z;  // resolved by compute_z when absent
};

struct PickOutcome {
    bool grasped = false;
    int object_id = -1;
};

struct PlaceOutcome {
    bool toppled = false;
    int object_id = -1;
};

struct StepOutcome {
    Primitive primitive = Primitive::Pick;
    bool overridden = false;  // gripper heuristic replaced the requested primitive
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double yaw = 0.0;
    bool grasped = false;
    bool toppled = false;
    int object_id = -1;
};

// Height target for a primitive at (x, y). The search region is a square of
// half-width params.z_region_half_width aligned with `yaw`.
double compute_z(const WorldState& world, double x, double y, double yaw, Primitive primitive,
                 std::optional<double> held_height);

PickOutcome resolve_pick(WorldState& world, double x, double y, double z, double yaw);
PlaceOutcome resolve_place(WorldState& world, double x, double y, double z, double yaw);

// Drops unsupported objects straight down until nothing moves.
void settle(WorldState& world);

StepOutcome step(WorldState& world, const Action& action, bool gripper_heuristic = true);

// --- queries ---------------------------------------------------------------

// Max height_at over unheld objects at q (0 for bare ground).
double surface_height(const WorldState& world, Vec2 q, int exclude_id = -1);

// Unheld object whose top is highest at q; ties go to the lower id.
std::optional<int> top_object_at(const WorldState& world, Vec2 q);

// Max surface height of every unheld object (other than exclude_id) overlapping the footprint.
double landing_height(const WorldState& world, const Shape& shape, const Pose& pose, int exclude_id);

// Height the object would drop to: max surface of overlapping objects that are not above it.
double support_height(const WorldState& world, const SimObject& obj);

bool is_settled(const WorldState& world, const SimObject& obj);

// Ids of unheld movable objects that are floating or interpenetrating.
std::vector<int> unsettled_objects(const WorldState& world);

// Minimum footprint distance from (shape, pose) to every unheld object not in `ignore`.
double clearance_to_others(const WorldState& world, const Shape& shape, const Pose& pose,
                           std::span<const int> ignore = {});

// Point the gripper should close on: the COM, or its projection onto the long-axis
// centerline for elongated footprints.
Vec2 grasp_point(const SimObject& obj);

// Movable objects, held one included.
std::size_t movable_count(const WorldState& world);

// World pose the held object takes when the gripper is at (x, y, yaw).
Pose held_object_pose(const WorldState& world, double x, double y, double yaw);

// Gripper yaw that puts the held object at `object_yaw`, and the yaw the object actually
// ends up with after the gripper yaw is normalized.
struct GripperTarget {
    double x, y, yaw;
    double object_yaw;
};
GripperTarget gripper_target_for(const WorldState& world, Vec2 object_xy, double object_yaw);

// Uniform free pose for `shape` within `bounds` (inset by the footprint's half extents),
// settled on whatever is below and at least `clearance` from unheld objects not in `ignore`.
std::optional<Pose> sample_free_pose(const WorldState& world, const Shape& shape, const Aabb& bounds,
                                     double clearance, bool random_yaw, Rng& rng, int attempts,
                                     std::span<const int> ignore = {}, double fixed_yaw = 0.0);

std::string encode_world(const WorldState& world);
WorldState decode_world(std::string_view bytes);

bool same_state(const WorldState& a, const WorldState& b);

}  // namespace barm
