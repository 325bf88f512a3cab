// Acceptance run: one PASS/FAIL line per criterion, exit status 1 when any criterion fails.

#include "barm/cli.hpp"
#include "barm/planners.hpp"
#include "barm/protocol.hpp"
#include "barm/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

using namespace barm;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void verdict(bool ok, const std::string& name, const std::string& detail) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
    failures += ok ? 0 : 1;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

const std::vector<std::string> kAllTasks = {"block_stacking",
                                            "house_building_1",
                                            "house_building_2",
                                            "house_building_3",
                                            "house_building_4",
                                            "improvise_house_building_2",
                                            "improvise_house_building_3",
                                            "bin_packing",
                                            "bottle_arrangement",
                                            "box_palletizing",
                                            "covid_test"};

constexpr std::uint64_t kSeed = 0;

// --- 1. expert success and step counts --------------------------------------

struct StepRule {
    int episodes;
    double min_success;
    int steps;       // required count for structures, upper bound otherwise
    bool exact;
};

const std::map<std::string, StepRule> kStepRules = {
    {"block_stacking", {500, 0.99, 6, true}},
    {"house_building_1", {200, 0.95, 6, true}},
    {"house_building_2", {200, 0.95, 4, true}},
    {"house_building_3", {200, 0.95, 6, true}},
    {"house_building_4", {200, 0.95, 10, true}},
    {"improvise_house_building_2", {200, 0.95, 4, true}},
    {"improvise_house_building_3", {200, 0.95, 6, true}},
    {"bin_packing", {200, 0.95, 16, false}},
    {"bottle_arrangement", {200, 0.95, 12, false}},
    {"box_palletizing", {200, 0.95, 36, false}},
    {"covid_test", {200, 0.95, 18, false}},
};

void table2_conformance() {
    const auto t0 = Clock::now();
    bool ok = true;
    std::ostringstream summary;
    for (const auto& name : kAllTasks) {
        const StepRule& rule = kStepRules.at(name);
        int successes = 0, bad_steps = 0;
        std::size_t longest = 0;
        run_expert_episodes(get_task(name), rule.episodes, EnvConfig{}, kSeed, 1, [&](Trajectory&& t) {
            if (!t.success) return;
            ++successes;
            const auto n = t.transitions.size();
            longest = std::max(longest, n);
            const bool fits = rule.exact ? n == static_cast<std::size_t>(rule.steps) : n <= static_cast<std::size_t>(rule.steps);
            bad_steps += fits ? 0 : 1;
        });
        const double rate = static_cast<double>(successes) / rule.episodes;
        const bool task_ok = rate >= rule.min_success && bad_steps == 0;
        ok = ok && task_ok;
        std::cout << "  " << name << ": " << successes << "/" << rule.episodes << " success, max steps " << longest
                  << (rule.exact ? " (required " : " (limit ") << rule.steps << "), step violations " << bad_steps
                  << (task_ok ? "" : "  <-- below target") << std::endl;
        if (!task_ok) summary << " " << name;
    }
    const double elapsed = seconds_since(t0);
    ok = ok && elapsed < 600.0;
    verdict(ok, "table2_conformance",
            "success >= 0.95 (0.99 block_stacking), exact optimal steps for structures, runtime " +
                fmt("%.1f", elapsed) + " s < 600 s" + (summary.str().empty() ? "" : "; failing:" + summary.str()));
}

// --- 2. bit-identical demo files ---------------------------------------------

std::string read_all(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void determinism(const fs::path& dir) {
    bool ok = true;
    std::uint64_t bytes = 0;
    std::ostringstream bad;
    for (const auto& name : kAllTasks) {
        auto run = [&](const std::string& tag, const std::string& workers) {
            const fs::path out = dir / (name + "_" + tag + ".barm");
            std::ostringstream o, e;
            const int code = run_cli({"run-expert", "--task", name, "--episodes", "10", "--seed", "2024", "--out",
                                      out.string(), "--workers", workers},
                                     o, e);
            if (code != kExitOk) throw std::runtime_error("run-expert failed: " + e.str());
            return read_all(out);
        };
        const std::string a = run("a", "1"), b = run("b", "1"), c = run("c", "4");
        const bool same = !a.empty() && a == b && a == c;
        bytes += a.size();
        if (!same) bad << " " << name;
        ok = ok && same;
    }
    verdict(ok, "determinism",
            "run-expert twice with workers=1 and once with workers=4, 11 tasks x 10 episodes, " +
                std::to_string(bytes) + " bytes per run" + (bad.str().empty() ? ", all identical" : "; differing:" + bad.str()));
}

// --- 3. heightmap against per-pixel analytic heights ---------------------------

void renderer_oracle() {
    const EnvConfig cfg;
    const GridSpec grid = grid_of(cfg, cfg.obs_size);
    double worst = 0.0;
    int worlds = 0, occupied = 0;
    Rng rng(kSeed);
    for (int i = 0; i < 100; ++i) {
        const std::string& name = kAllTasks[static_cast<std::size_t>(i) % kAllTasks.size()];
        Episode ep(get_task(name), cfg);
        ep.reset(derive_seed(kSeed, static_cast<std::uint64_t>(i)));
        // Mix in stacked and held configurations.
        const int moves = i % 8;
        Observation obs = ep.observe();
        for (int m = 0; m < moves && !ep.done(); ++m) {
            obs = ep.step(m % 2 == 0 ? expert_or_random_action(ep) : random_action(ep, rng)).obs;
        }
        const WorldState& w = ep.world();
        for (int r = 0; r < grid.size; ++r) {
            for (int c = 0; c < grid.size; ++c) {
                const Vec2 q{grid.x_min + (c + 0.5) * grid.pitch(), grid.y_min + (r + 0.5) * grid.pitch()};
                double h = 0.0;
                for (const auto& o : w.objects) {
                    if (w.is_held(o.id)) continue;
                    if (auto v = height_at(o.shape, o.pose, q)) h = std::max(h, *v);
                }
                h = std::clamp(h, 0.0, cfg.workspace.z_max);
                worst = std::max(worst, std::abs(obs.heightmap.at(r, c) - h));
                occupied += h > 0.0 ? 1 : 0;
            }
        }
        ++worlds;
    }
    verdict(worst <= 1e-6 && worlds == 100, "renderer_oracle",
            std::to_string(worlds) + " worlds, " + std::to_string(occupied) + " occupied cells, max |error| " +
                fmt("%.3g", worst) + " m (tolerance 1e-6)");
}

// --- 4. reversed deconstructions reach the goal -----------------------------

void decon_reversal() {
    const std::vector<std::string> structures(kAllTasks.begin(), kAllTasks.begin() + 7);
    int generated = 0, reached = 0, attempts = 0;
    for (std::uint64_t i = 0; generated < 100 && attempts < 1000; ++i, ++attempts) {
        const auto task = get_task(structures[i % structures.size()]);
        const auto r = decon_generate(task, EnvConfig{}, derive_seed(kSeed + 1, i));
        if (!r) continue;
        ++generated;
        Episode ep(task, EnvConfig{});
        ep.reset_to(r->initial, TaskState{}, r->params);
        StepResult last;
        for (const auto& a : reverse_actions(r->deconstruction)) last = ep.step(a);
        reached += (ep.goal_reached() && last.reward == 1.0f && last.done) ? 1 : 0;
    }
    verdict(generated == 100 && reached == 100, "decon_reversal",
            std::to_string(reached) + "/" + std::to_string(generated) + " replays reach the goal with final reward 1 (" +
                std::to_string(attempts) + " generation attempts)");
}

// --- 5. reward and termination contract -------------------------------------

void sparse_reward() {
    Episode ep(get_task("block_stacking"), EnvConfig{});
    Rng rng(kSeed + 5);
    std::uint64_t seed = kSeed + 5;
    ep.reset(seed);
    int violations = 0, goals = 0, timeouts = 0;
    for (int i = 0; i < 10000; ++i) {
        const StepResult r = ep.step(random_action(ep, rng));
        const bool goal = ep.task().goal(ep.world(), ep.task_state(), ep.params());
        const bool limit = ep.world().step_count == 10;
        violations += ((r.reward == 1.0f) != goal) ? 1 : 0;
        violations += (r.reward != 0.0f && r.reward != 1.0f) ? 1 : 0;
        violations += (r.done != (goal || limit)) ? 1 : 0;
        goals += goal ? 1 : 0;
        timeouts += (limit && !goal) ? 1 : 0;
        if (r.done) ep.reset(++seed);
    }
    verdict(violations == 0 && ep.max_steps() == 10, "sparse_reward",
            "10000 random steps, " + std::to_string(violations) + " violations of reward = goal and done = goal or step = 10 (" +
                std::to_string(goals) + " goal steps, " + std::to_string(timeouts) + " timeouts)");
}

// --- 6. settled invariant under random manipulation --------------------------

void settledness_fuzz() {
    Rng rng(kSeed + 6);
    int unsettled = 0, count_changes = 0, steps = 0;
    std::uint64_t seed = kSeed + 6;
    for (std::size_t t = 0; steps < 10000; ++t) {
        Episode ep(get_task(kAllTasks[t % kAllTasks.size()]), EnvConfig{});
        ep.reset(++seed);
        while (!ep.done() && steps < 10000) {
            const ActionVec a = random_action(ep, rng);
            // The simulator step alone never creates or removes objects; task reactions
            // (covid swabs used up, pallet boxes arriving) are checked for settledness only.
            WorldState probe = ep.world();
            Action act;
            act.primitive = a[kSlotP] >= 0.5f ? Primitive::Place : Primitive::Pick;
            act.x = a[kSlotX];
            act.y = a[kSlotY];
            act.yaw = a[kSlotR];
            const std::size_t before = probe.objects.size();
            step(probe, act);
            count_changes += probe.objects.size() != before ? 1 : 0;
            unsettled += unsettled_objects(probe).empty() ? 0 : 1;

            ep.step(a);
            unsettled += unsettled_objects(ep.world()).empty() ? 0 : 1;
            ++steps;
        }
    }
    verdict(unsettled == 0 && count_changes == 0, "settledness_fuzz",
            std::to_string(steps) + " random steps over 11 tasks, " + std::to_string(unsettled) + " unsettled states, " +
                std::to_string(count_changes) + " object count changes");
}

// --- 7. wire protocol adds nothing ------------------------------------------

void protocol_transparency() {
    TcpServer server("127.0.0.1", 0, 1);
    server.start();
    bool ok = true;
    std::uint64_t frames = 0;
    std::ostringstream bad;
    for (const auto& name : kAllTasks) {
        Client client = Client::connect_tcp("127.0.0.1", server.port());
        EnvConfig cfg;
        cfg.seed = kSeed + 7;
        constexpr int n = 2;
        client.configure(n, name, cfg);
        VectorEnv local(n, name, cfg);

        auto raw = [&](MsgType type, std::vector<std::uint8_t> payload) {
            auto reply = client.request({type, std::move(payload)});
            if (!reply || reply->type == MsgType::Error) throw std::runtime_error("server error during " + name);
            ++frames;
            return reply->payload;
        };
        const auto local_reset = local.reset();
        bool same = raw(MsgType::Reset, {}) ==
                    encode_obs({local_reset, std::vector<float>(n, 0.0f), std::vector<bool>(n, false)});
        int episodes = 0;
        while (episodes < 20 && same) {
            const auto wire_actions = raw(MsgType::Expert, {});
            const auto local_actions = local.get_next_action();
            same = same && wire_actions == encode_actions(local_actions);
            const auto wire_obs = raw(MsgType::Step, encode_actions(local_actions));
            BatchStep s = local.step(local_actions);
            for (bool d : s.dones) episodes += d ? 1 : 0;
            same = same && wire_obs == encode_obs({std::move(s.obs), std::move(s.rewards), std::move(s.dones)});
        }
        client.close();
        if (!same) bad << " " << name;
        ok = ok && same;
    }
    server.stop();
    verdict(ok, "protocol_transparency",
            "20 expert episodes per task over TCP loopback, " + std::to_string(frames) +
                " reply payloads compared byte for byte with the in-process runner" +
                (bad.str().empty() ? "" : "; differing:" + bad.str()));
}

// --- 8. steps per second -----------------------------------------------------

double steps_per_second(const std::string& task, int n, int steps) {
    EnvConfig cfg;  // obs_size 128
    VectorEnv vec(n, task, cfg, n);
    vec.reset();
    Rng rng(kSeed + 8);
    std::vector<ActionVec> actions(static_cast<std::size_t>(n));
    double busy = 0.0;
    for (int s = 0; s < steps; ++s) {
        for (int i = 0; i < n; ++i) actions[static_cast<std::size_t>(i)] = random_action(vec.env(i), rng);
        const auto t0 = Clock::now();
        vec.step(actions);
        busy += seconds_since(t0);
    }
    return n * steps / busy;
}

void throughput() {
    for (const auto& name : kAllTasks) {
        std::cout << "  " << name << ": " << fmt("%.0f", steps_per_second(name, 1, 300)) << " steps/s single env"
                  << std::endl;
    }
    const double single = steps_per_second("block_stacking", 1, 3000);
    const double aggregate = steps_per_second("block_stacking", 5, 3000);
    const double ratio = aggregate / single;
    verdict(single >= 500.0 && ratio >= 2.5, "throughput",
            "block_stacking obs 128: single " + fmt("%.0f", single) + " steps/s (>= 500), 5 envs " +
                fmt("%.0f", aggregate) + " steps/s = " + fmt("%.2f", ratio) + "x single (>= 2.5) on " +
                std::to_string(std::thread::hardware_concurrency()) + " hardware threads");
}

}  // namespace

int main() {
    const fs::path dir = fs::temp_directory_path() / "barm_acceptance";
    fs::create_directories(dir);
    const auto t0 = Clock::now();
    try {
        table2_conformance();
        determinism(dir);
        renderer_oracle();
        decon_reversal();
        sparse_reward();
        settledness_fuzz();
        protocol_transparency();
        throughput();
    } catch (const std::exception& e) {
        std::cout << "FAIL acceptance aborted: " << e.what() << std::endl;
        return 1;
    }
    fs::remove_all(dir);
    std::cout << failures << " of 8 criteria failed (" << fmt("%.1f", seconds_since(t0)) << " s)" << std::endl;
    return failures == 0 ? 0 : 1;
}
