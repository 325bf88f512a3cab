#pragma once

// One environment: a task, a configuration and the current episode.

#include "barm/config.hpp"
#include "barm/render.hpp"
#include "barm/sim.hpp"
#include "barm/tasks.hpp"

#include <array>
#include <memory>
#include <span>

namespace barm {

// Canonical action slots (p, x, y, z, r). Slots absent from the action sequence are NaN;
// a NaN z asks for the height heuristic.
using ActionVec = std::array<float, 5>;

inline constexpr std::size_t kSlotP = 0, kSlotX = 1, kSlotY = 2, kSlotZ = 3, kSlotR = 4;

// Spreads a compact action ordered by `sequence` into canonical slots.
// Throws ActionFormatError when the length does not match.
ActionVec expand_action(std::span<const float> compact, std::string_view sequence);

// Throws ActionFormatError when a slot named in `sequence` is not finite (z may be NaN).
void check_action(const ActionVec& action, std::string_view sequence);

struct StepResult {
    Observation obs;
    float reward = 0.0f;
    bool done = false;
    ActionVec executed{};  // primitive, clipped x/y, resolved z, normalized yaw; NaN where unused
    StepOutcome outcome;
};

class Episode {
public:
    Episode(std::shared_ptr<const TaskSpec> task, EnvConfig cfg);

    // Starts a fresh episode; every random draw flows from `seed`.
    Observation reset(std::uint64_t seed);
    // Starts from an explicit state (step count and in-hand image are cleared).
    Observation reset_to(WorldState world, TaskState state, TaskParams params);

    // Throws UsageError before the first reset, ActionFormatError for non-finite required slots.
    StepResult step(const ActionVec& action);

    Observation observe() const;
    bool goal_reached() const;
    bool done() const;
    bool started() const { return started_; }

    const WorldState& world() const { return world_; }
    const TaskState& task_state() const { return state_; }
    const TaskParams& params() const { return params_; }
    const TaskSpec& task() const { return *task_; }
    std::shared_ptr<const TaskSpec> task_ptr() const { return task_; }
    const EnvConfig& config() const { return cfg_; }
    const GridSpec& grid() const { return grid_; }
    int max_steps() const { return max_steps_; }
    std::uint64_t seed() const { return world_.episode_seed; }

private:
    void update_in_play();
    void prepare_world(WorldState& w, std::uint64_t seed) const;

    std::shared_ptr<const TaskSpec> task_;
    EnvConfig cfg_;
    GridSpec grid_;
    int max_steps_ = 0;
    bool started_ = false;
    WorldState world_;
    TaskState state_;
    TaskParams params_;
    HeightImage heightmap_;
    HeightImage in_hand_;
};

}  // namespace barm
