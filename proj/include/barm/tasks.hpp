#pragma once

// Task suite: initializers, goal predicates and scripted reactions, plus a name registry.

#include "barm/config.hpp"
#include "barm/sim.hpp"

#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace barm {

// Clearance between footprints when scattering objects.
inline constexpr double kSeparation = 0.015;
// Nominal edge of the structure cube at the reference object scale.
inline constexpr double kNominalBlock = 0.03;
// Vertical contact tolerance used by goal predicates.
inline constexpr double kLevelTolerance = 1e-6;

struct TaskParams {
    int num_objects = 0;
    double size_scale = 1.0;  // multiplier on nominal structure-block sizes
    bool random_orientation = true;
    Aabb bounds{0.25, 0.65, -0.2, 0.2};

    double block() const { return kNominalBlock * size_scale; }
};

struct PalletState {
    int pallet_id = -1;
    int num_boxes = 0;
    int next_slot = 0;               // number of filled slots
    std::vector<Pose> slots;         // world poses, z = box center when seated
    std::vector<bool> filled;
    int loose_box = -1;              // box waiting on the table, -1 when none
};

struct CovidState {
    enum class Phase { PresentSwab, PresentTube, WaitUser, Collect };
    int rounds = 0;  // completed rounds
    Phase phase = Phase::PresentSwab;
    int new_box = -1;
    int test_area = -1;
    int used_box = -1;
};

using TaskState = std::variant<std::monostate, PalletState, CovidState>;

struct TaskSpec {
    std::string name;
    int num_objects = 0;
    bool variable_num_objects = false;
    int max_steps = 0;
    std::function<int(int num_objects)> optimal_steps;
    bool supports_deconstruction = false;

    // Adds fixtures and objects to an empty world, drawing from world.rng.
    std::function<TaskState(WorldState&, const TaskParams&)> init;
    std::function<bool(const WorldState&, const TaskState&, const TaskParams&)> goal;
    // Scripted reaction after every step; may be empty.
    std::function<void(WorldState&, TaskState&, const StepOutcome&, const TaskParams&)> on_step;
};

// Throws RegistrationError for an empty or duplicate name or a spec missing init/goal.
void register_task(TaskSpec spec);
// nullptr when unknown.
std::shared_ptr<const TaskSpec> find_task(std::string_view name);
// Throws ConfigError (key "task") when unknown.
std::shared_ptr<const TaskSpec> get_task(std::string_view name);
std::vector<std::string> task_names();

// Resolves per-episode parameters; draws the object scale from world.rng.
TaskParams make_task_params(const TaskSpec& spec, const EnvConfig& cfg, Rng& rng);
int resolve_max_steps(const TaskSpec& spec, const EnvConfig& cfg);

// Runs spec.init with bounded retries. Throws InitInfeasible naming the task.
TaskState init_episode(const TaskSpec& spec, WorldState& world, const TaskParams& params);

// --- shared shapes and geometry --------------------------------------------

Shape cube_shape(const TaskParams& p);
Shape triangle_shape(const TaskParams& p);
Shape roof_shape(const TaskParams& p);
Shape brick_shape(const TaskParams& p);
// Convex prism with centroid at the local origin, 4-6 hull vertices.
Shape random_block_shape(double height, const TaskParams& p, Rng& rng);

inline const Shape kBin = Container{0.176, 0.144, 0.08, 0.008, 0.072};
inline const Shape kTray = Container{0.24, 0.16, 0.05, 0.008, 0.042};
inline const Shape kBottle = Cylinder{0.025, 0.14};
inline const Shape kPallet = Slab{0.232, 0.192, 0.03};
inline const Shape kBox = Cuboid{0.072, 0.045, 0.045};
inline const Shape kCovidPad = Slab{0.12, 0.12, 0.005};
inline const Shape kSwab = Cuboid{0.07, 0.01, 0.01};
inline const Shape kTube = Cuboid{0.08, 0.017, 0.017};

// Cavity of a Container in world coordinates, and the height of its rim.
Polygon cavity_polygon(const SimObject& container);
double cavity_floor(const SimObject& container);

// Pallet slot centers in the pallet frame for `num_boxes` boxes (layer-major).
std::vector<Pose> pallet_slots_local(int num_boxes);
inline constexpr double kSlotPosTolerance = 0.01;
inline constexpr double kSlotYawTolerance = 10.0 * 3.14159265358979323846 / 180.0;

// Covid fixtures in the pad frame.
Vec2 covid_used_slot(const SimObject& used_box, int round);

// --- predicate helpers -------------------------------------------------------

bool rests_on(const SimObject& upper, const SimObject& lower);
// rests_on plus COM offset within half a block.
bool stacked_on(const SimObject& upper, const SimObject& lower, double block);
// Same base and top, COM distance within [block, 5/3 block].
bool adjacent(const SimObject& a, const SimObject& b, double block);
// `top` rests on both and its footprint covers both COMs.
bool spans(const SimObject& top, const SimObject& a, const SimObject& b);
// Footprint inside the container cavity, base on or above its floor and, with `below_rim`,
// top at or below the rim.
bool inside_container(const SimObject& obj, const SimObject& container, bool below_rim = true);
// COM inside the pad footprint and resting on the pad.
bool resting_on_pad(const SimObject& obj, const SimObject& pad);

std::vector<const SimObject*> objects_of(const WorldState& world, Category c);

}  // namespace barm
