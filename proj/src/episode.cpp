#include "barm/episode.hpp"

#include "barm/errors.hpp"

#include <cmath>
#include <limits>

namespace barm {
namespace {

constexpr float kNaN = std::numeric_limits<float>::quiet_NaN();

bool has(std::string_view seq, char c) { return seq.find(c) != std::string_view::npos; }

float required(const ActionVec& a, std::size_t slot, const char* name) {
    if (!std::isfinite(a[slot])) {
        throw ActionFormatError(std::string("action slot '") + name + "' must be finite");
    }
    return a[slot];
}

}  // namespace

ActionVec expand_action(std::span<const float> compact, std::string_view sequence) {
    if (compact.size() != sequence.size()) {
        throw ActionFormatError("expected " + std::to_string(sequence.size()) + " action values for '" +
                                std::string(sequence) + "', got " + std::to_string(compact.size()));
    }
    ActionVec out;
    out.fill(kNaN);
    constexpr std::string_view order = "pxyzr";
    for (std::size_t i = 0; i < sequence.size(); ++i) out[order.find(sequence[i])] = compact[i];
    return out;
}

void check_action(const ActionVec& a, std::string_view seq) {
    constexpr std::string_view order = "pxyzr";
    constexpr const char* names[] = {"p", "x", "y", "z", "r"};
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i == kSlotZ || !has(seq, order[i])) continue;
        required(a, i, names[i]);
    }
}

Episode::Episode(std::shared_ptr<const TaskSpec> task, EnvConfig cfg)
    : task_(std::move(task)), cfg_(std::move(cfg)) {
    if (!task_) throw ConfigError("task", "no task given");
    validate_config(cfg_);
    grid_ = grid_of(cfg_, cfg_.obs_size);
    max_steps_ = resolve_max_steps(*task_, cfg_);
    // Fail early on count mismatches rather than at the first reset.
    Rng probe;
    make_task_params(*task_, cfg_, probe);
}

void Episode::prepare_world(WorldState& w, std::uint64_t seed) const {
    w.rng = Rng(seed);
    w.episode_seed = seed;
    w.params.workspace = cfg_.workspace;
    w.params.half_rotation = cfg_.half_rotation;
    w.gripper.max_open_width = gripper_open_width(cfg_.robot);
}

Observation Episode::reset(std::uint64_t seed) {
    WorldState w;
    prepare_world(w, seed);
    params_ = make_task_params(*task_, cfg_, w.rng);
    state_ = init_episode(*task_, w, params_);
    world_ = std::move(w);
    started_ = true;
    heightmap_ = render_heightmap(world_, grid_, cfg_.workspace.z_max);
    in_hand_ = HeightImage(cfg_.in_hand_size);
    return observe();
}

Observation Episode::reset_to(WorldState world, TaskState state, TaskParams params) {
    world_ = std::move(world);
    world_.step_count = 0;
    state_ = std::move(state);
    params_ = params;
    started_ = true;
    heightmap_ = render_heightmap(world_, grid_, cfg_.workspace.z_max);
    in_hand_ = HeightImage(cfg_.in_hand_size);
    return observe();
}

Observation Episode::observe() const { return {heightmap_, in_hand_, world_.gripper.is_holding()}; }

bool Episode::goal_reached() const { return started_ && task_->goal(world_, state_, params_); }

bool Episode::done() const { return goal_reached() || world_.step_count >= max_steps_; }

StepResult Episode::step(const ActionVec& a) {
    if (!started_) throw UsageError("step called before reset");
    const std::string_view seq = cfg_.action_sequence;

    Action act;
    act.x = required(a, kSlotX, "x");
    act.y = required(a, kSlotY, "y");
    act.yaw = has(seq, 'r') ? required(a, kSlotR, "r") : 0.0;
    if (has(seq, 'p')) {
        act.primitive = required(a, kSlotP, "p") >= 0.5f ? Primitive::Place : Primitive::Pick;
    } else {
        act.primitive = world_.gripper.is_holding() ? Primitive::Place : Primitive::Pick;
    }
    if (has(seq, 'z') && std::isfinite(a[kSlotZ])) act.z = a[kSlotZ];

    StepResult r;
    r.outcome = barm::step(world_, act);
    if (r.outcome.primitive == Primitive::Pick) {
        in_hand_ = render_in_hand(heightmap_, grid_, r.outcome.x, r.outcome.y, r.outcome.yaw, cfg_.in_hand_size);
    } else {
        in_hand_ = HeightImage(cfg_.in_hand_size);
    }
    if (task_->on_step) task_->on_step(world_, state_, r.outcome, params_);
    update_in_play();
    heightmap_ = render_heightmap(world_, grid_, cfg_.workspace.z_max);

    const bool goal = task_->goal(world_, state_, params_);
    r.reward = goal ? 1.0f : 0.0f;
    r.done = goal || world_.step_count >= max_steps_;
    r.obs = observe();
    r.executed = {has(seq, 'p') ? static_cast<float>(r.outcome.primitive == Primitive::Place) : kNaN,
                  static_cast<float>(r.outcome.x), static_cast<float>(r.outcome.y),
                  has(seq, 'z') ? static_cast<float>(r.outcome.z) : kNaN,
                  has(seq, 'r') ? static_cast<float>(r.outcome.yaw) : kNaN};
    return r;
}

void Episode::update_in_play() {
    const auto& ws = cfg_.workspace;
    for (auto& o : world_.objects) {
        if (!o.movable || !o.in_play || world_.is_held(o.id)) continue;
        bool inside;
        if (cfg_.workspace_check == WorkspaceCheck::Point) {
            const Vec2 c = o.com();
            inside = c.x >= ws.x_min - kGeomEps && c.x <= ws.x_max + kGeomEps && c.y >= ws.y_min - kGeomEps &&
                     c.y <= ws.y_max + kGeomEps;
        } else {
            const Aabb b = aabb_of(footprint_polygon(o.shape, o.pose));
            inside = b.x_min >= ws.x_min - kGeomEps && b.x_max <= ws.x_max + kGeomEps &&
                     b.y_min >= ws.y_min - kGeomEps && b.y_max <= ws.y_max + kGeomEps;
        }
        if (!inside) o.in_play = false;
    }
}

}  // namespace barm
