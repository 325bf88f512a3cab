#pragma once

// Expert data: scripted waypoint policies per task and the deconstruction planner.

#include "barm/episode.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace barm {

struct Waypoint {
    Primitive primitive = Primitive::Pick;
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;
};

// Expert policies see the world, task state and per-episode parameters, plus a generator
// seeded from (episode seed, step count) so their draws never disturb the world's stream.
using ExpertFn = std::function<Waypoint(const WorldState&, const TaskState&, const TaskParams&, Rng&)>;

// Throws RegistrationError for a duplicate name.
void register_expert(const std::string& task, ExpertFn fn);
bool has_expert(std::string_view task);

// Next expert action for the episode (z left to the heuristic). Throws PlannerStuck.
ActionVec waypoint_next_action(const Episode& ep);

struct Transition {
    Observation obs;  // observation the action was taken from
    ActionVec action{};
    float reward = 0.0f;
    bool done = false;
};

struct Trajectory {
    std::string task;
    std::uint64_t seed = 0;
    bool success = false;
    std::vector<Transition> transitions;
};

// Rolls the waypoint expert from a fresh reset until done. PlannerStuck ends the
// episode as a failure.
Trajectory waypoint_rollout(const std::shared_ptr<const TaskSpec>& task, const EnvConfig& cfg, std::uint64_t seed);

// --- deconstruction ---------------------------------------------------------

// Target of one structure role, in build order.
struct RoleTarget {
    Category category;
    Vec2 xy;           // COM target
    double yaw;        // object yaw
    std::vector<int> supports;  // indexes of supporting roles; empty for ground
};

// Build-order blueprint for a structure task anchored at (anchor_xy, anchor_yaw) and
// extended along direction index k (quarter turns). Empty for non-structure tasks.
std::vector<RoleTarget> structure_blueprint(std::string_view task, const TaskParams& p, Vec2 anchor_xy,
                                            double anchor_yaw, int k);

struct DeconResult {
    Trajectory trajectory;        // construction trajectory (reversed deconstruction)
    WorldState initial;           // dispersed state the construction starts from
    TaskParams params;
    std::vector<ActionVec> deconstruction;  // actions as executed while taking the structure apart
};

// One attempt; nullopt when a transition fails (miss, topple, failed replay check).
// Throws InvalidInput when the task does not support deconstruction.
std::optional<DeconResult> decon_generate(const std::shared_ptr<const TaskSpec>& task, const EnvConfig& cfg,
                                          std::uint64_t seed);

// Reverses a pick/place action list: (pick@p, place@q) pairs become (pick@q, place@p)
// in reverse order.
std::vector<ActionVec> reverse_actions(const std::vector<ActionVec>& deconstruction);

// One expert episode: deconstruction where supported, otherwise a waypoint rollout.
Trajectory expert_episode(const std::shared_ptr<const TaskSpec>& task, const EnvConfig& cfg, std::uint64_t seed);

// Seed of attempt i under a base seed.
std::uint64_t attempt_seed(std::uint64_t base, std::uint64_t index);

// Collects the first n successful episodes over at most 2n attempts, in attempt order,
// fanning attempts out over `workers` threads. Each accepted trajectory is passed to `sink`.
// Throws GenerationError naming the task when fewer than n succeed.
struct GenerationStats {
    int attempts = 0;
    int successes = 0;
};
GenerationStats generate_demos(const std::shared_ptr<const TaskSpec>& task, int n, const EnvConfig& cfg,
                               std::uint64_t seed, int workers, const std::function<void(Trajectory&&)>& sink);

// Convenience form returning the trajectories.
std::vector<Trajectory> generate_demos(const std::shared_ptr<const TaskSpec>& task, int n, const EnvConfig& cfg,
                                       std::uint64_t seed, int workers = 1);

// Runs `count` attempts (no retries) in attempt order; every trajectory, failed ones included,
// reaches `sink`.
void run_expert_episodes(const std::shared_ptr<const TaskSpec>& task, int count, const EnvConfig& cfg,
                         std::uint64_t seed, int workers, const std::function<void(Trajectory&&)>& sink);

}  // namespace barm
