#pragma once

// A batch of independent environments stepped in lockstep.

#include "barm/episode.hpp"
#include "barm/pool.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace barm {

inline constexpr int kDefaultEnvCount = 5;

struct BatchStep {
    // Observation the next action applies to: the reset observation for envs that just finished.
    std::vector<Observation> obs;
    std::vector<float> rewards;
    std::vector<bool> dones;
    // Last observation of each episode that finished on this step.
    std::vector<std::optional<Observation>> final_obs;
};

class VectorEnv {
public:
    // Env i starts from seed cfg.seed + i. Up to `workers` threads step the batch, capped at the
    // hardware thread count (1 = inline).
    // Throws ConfigError for an unknown task or invalid config, InvalidInput for n < 1.
    VectorEnv(int n, const std::string& task, const EnvConfig& cfg, int workers = 1);

    int size() const { return static_cast<int>(envs_.size()); }
    const EnvConfig& config() const { return cfg_; }
    const Episode& env(int i) const { return envs_.at(static_cast<std::size_t>(i)); }
    bool started() const { return started_; }

    std::vector<Observation> reset();

    // Finished envs reset in the same call; their next seed is split from the previous one.
    // Throws UsageError before reset, ActionFormatError for a wrong action count or bad slots.
    BatchStep step(std::span<const ActionVec> actions);

    // Expert action per env. Falls back to a seeded random action when the expert is stuck.
    std::vector<ActionVec> get_next_action() const;

    void close();

private:
    EnvConfig cfg_;
    std::vector<Episode> envs_;
    std::vector<std::uint64_t> seeds_;
    std::unique_ptr<WorkerPool> pool_;
    bool started_ = false;
    bool closed_ = false;
};

// Seed of the episode that follows one started from `seed`.
std::uint64_t next_episode_seed(std::uint64_t seed);

// Uniform action within the workspace, primitive matching the gripper state.
ActionVec random_action(const Episode& ep, Rng& rng);

// Expert action, or random_action from a generator seeded by (episode seed, step) if stuck.
ActionVec expert_or_random_action(const Episode& ep);

}  // namespace barm
