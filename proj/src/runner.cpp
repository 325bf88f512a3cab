#include "barm/runner.hpp"

#include "barm/errors.hpp"
#include "barm/planners.hpp"

#include <algorithm>
#include <limits>
#include <thread>
#include <numbers>

namespace barm {
namespace {

constexpr std::uint64_t kFallbackStream = 0xFA11BAC;

}  // namespace

std::uint64_t next_episode_seed(std::uint64_t seed) { return splitmix64(seed); }

VectorEnv::VectorEnv(int n, const std::string& task, const EnvConfig& cfg, int workers) : cfg_(cfg) {
    if (n < 1) throw InvalidInput("environment count must be at least 1");
    const auto spec = get_task(task);
    envs_.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        envs_.emplace_back(spec, cfg_);
        seeds_.push_back(cfg_.seed + static_cast<std::uint64_t>(i));
    }
    // More threads than cores only adds switching cost to a lockstep batch.
    const int cores = std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
    pool_ = std::make_unique<WorkerPool>(std::min({workers, n, cores}));
}

std::vector<Observation> VectorEnv::reset() {
    if (closed_) throw UsageError("environment is closed");
    std::vector<Observation> out(envs_.size());
    pool_->parallel_for(envs_.size(), [&](std::size_t i) { out[i] = envs_[i].reset(seeds_[i]); });
    started_ = true;
    return out;
}

BatchStep VectorEnv::step(std::span<const ActionVec> actions) {
    if (closed_) throw UsageError("environment is closed");
    if (!started_) throw UsageError("step called before reset");
    if (actions.size() != envs_.size()) {
        throw ActionFormatError("expected " + std::to_string(envs_.size()) + " actions, got " +
                                std::to_string(actions.size()));
    }
    // Reject the whole batch before any env moves.
    for (const auto& a : actions) check_action(a, cfg_.action_sequence);
    const std::size_t n = envs_.size();
    BatchStep out;
    out.obs.resize(n);
    out.rewards.resize(n);
    out.dones.resize(n);
    out.final_obs.resize(n);
    std::vector<std::exception_ptr> errors(n);
    pool_->parallel_for(n, [&](std::size_t i) {
        try {
            StepResult r = envs_[i].step(actions[i]);
            out.rewards[i] = r.reward;
            out.dones[i] = r.done;
            if (r.done) {
                out.final_obs[i] = std::move(r.obs);
                seeds_[i] = next_episode_seed(seeds_[i]);
                out.obs[i] = envs_[i].reset(seeds_[i]);
            } else {
                out.obs[i] = std::move(r.obs);
            }
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

std::vector<ActionVec> VectorEnv::get_next_action() const {
    if (!started_) throw UsageError("get_next_action called before reset");
    std::vector<ActionVec> out(envs_.size());
    pool_->parallel_for(envs_.size(), [&](std::size_t i) { out[i] = expert_or_random_action(envs_[i]); });
    return out;
}

void VectorEnv::close() {
    closed_ = true;
    pool_.reset();
    pool_ = std::make_unique<WorkerPool>(1);
}

ActionVec random_action(const Episode& ep, Rng& rng) {
    const auto& ws = ep.config().workspace;
    const double x = rng.uniform(ws.x_min, ws.x_max);
    const double y = rng.uniform(ws.y_min, ws.y_max);
    const double yaw = rng.uniform(0.0, ep.config().half_rotation ? std::numbers::pi : 2 * std::numbers::pi);
    const float p = ep.world().gripper.is_holding() ? 1.0f : 0.0f;
    return {p, static_cast<float>(x), static_cast<float>(y), std::numeric_limits<float>::quiet_NaN(),
            static_cast<float>(yaw)};
}

ActionVec expert_or_random_action(const Episode& ep) {
    try {
        return waypoint_next_action(ep);
    } catch (const PlannerStuck&) {
        Rng rng(derive_seed(derive_seed(ep.seed(), kFallbackStream), static_cast<std::uint64_t>(ep.world().step_count)));
        return random_action(ep, rng);
    }
}

}  // namespace barm
