#include "barm/cli.hpp"

#include "barm/demo_file.hpp"
#include "barm/errors.hpp"
#include "barm/planners.hpp"
#include "barm/protocol.hpp"
#include "barm/runner.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

namespace barm {
namespace {

// Config flags shared by every command: --kebab-case spellings of the config keys.
struct ConfigFlags {
    std::string config_path;
    std::map<std::string, std::string> values;

    void add_to(CLI::App& cmd) {
        cmd.add_option("--config", config_path, "key=value config file");
        for (const char* key : {"robot", "action_sequence", "workspace", "object_scale_range", "max_steps", "num_objects",
                                "obs_size", "in_hand_size", "fast_mode", "render", "random_orientation", "half_rotation",
                                "workspace_check"}) {
            std::string flag = "--" + std::string(key);
            std::replace(flag.begin(), flag.end(), '_', '-');
            cmd.add_option_function<std::string>(flag, [this, key](const std::string& v) { values[key] = v; });
        }
    }

    EnvConfig resolve(std::uint64_t seed) const {
        EnvConfig cfg;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw IoError("cannot read config file '" + config_path + "'");
            std::stringstream ss;
            ss << in.rdbuf();
            cfg = parse_config_text(ss.str());
        }
        for (const auto& [k, v] : values) apply_config_value(cfg, k, v);
        cfg.seed = seed;
        validate_config(cfg);
        return cfg;
    }
};

double mean_steps(const std::vector<int>& steps) {
    if (steps.empty()) return 0.0;
    double s = 0.0;
    for (int v : steps) s += v;
    return s / static_cast<double>(steps.size());
}

int percentile(std::vector<int> v, double q) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size()))) - 1;
    return v[std::min(idx, v.size() - 1)];
}

std::string fixed(double v, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Manipulation benchmark environments"};
    app.require_subcommand(1);

    std::string task;
    int episodes = 0;
    std::uint64_t seed = 0;
    int workers = 1;
    std::string out_path;

    auto* demo = app.add_subcommand("demo-gen", "Generate expert demonstrations");
    ConfigFlags demo_cfg;
    demo->add_option("--task", task)->required();
    demo->add_option("--episodes", episodes)->required();
    demo->add_option("--seed", seed);
    demo->add_option("--out", out_path)->required();
    demo->add_option("--workers", workers);
    demo_cfg.add_to(*demo);

    auto* expert = app.add_subcommand("run-expert", "Run the expert and report its success rate");
    ConfigFlags expert_cfg;
    expert->add_option("--task", task)->required();
    expert->add_option("--episodes", episodes)->required();
    expert->add_option("--seed", seed);
    expert->add_option("--out", out_path, "also record every episode to this demo file");
    expert->add_option("--workers", workers);
    expert_cfg.add_to(*expert);

    int envs = kDefaultEnvCount;
    int steps = 1000;
    auto* bench = app.add_subcommand("bench", "Measure environment steps per second");
    ConfigFlags bench_cfg;
    bench->add_option("--task", task)->required();
    bench->add_option("--envs", envs);
    bench->add_option("--steps", steps);
    bench->add_option("--seed", seed);
    bench_cfg.add_to(*bench);

    std::string out_dir = ".";
    auto* render = app.add_subcommand("render", "Write heightmap PNGs of one expert episode");
    ConfigFlags render_cfg;
    render->add_option("--task", task)->required();
    render->add_option("--seed", seed);
    render->add_option("--out-dir", out_dir);
    render_cfg.add_to(*render);

    int port = kDefaultPort;
    std::string host = "127.0.0.1";
    bool use_stdio = false;
    auto* serve = app.add_subcommand("serve", "Serve environments over the frame protocol");
    serve->add_option("--port", port);
    serve->add_option("--host", host);
    serve->add_flag("--stdio", use_stdio);
    serve->add_option("--workers", workers);

    auto* validate = app.add_subcommand("validate", "Resolve and print a configuration");
    ConfigFlags validate_cfg;
    validate->add_option("--seed", seed);
    validate_cfg.add_to(*validate);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (demo->parsed()) {
            const EnvConfig cfg = demo_cfg.resolve(seed);
            const auto spec = get_task(task);
            if (episodes < 1) throw UsageError("--episodes must be at least 1");
            DemoWriter writer(out_path, task, cfg);
            std::vector<int> lengths;
            const auto stats = generate_demos(spec, episodes, cfg, seed, workers, [&](Trajectory&& t) {
                lengths.push_back(static_cast<int>(t.transitions.size()));
                writer.write(t);
            });
            writer.close();
            out << "episodes=" << writer.count() << " successes=" << stats.successes << " attempts=" << stats.attempts
                << " mean_steps=" << fixed(mean_steps(lengths), 2) << '\n';
            return kExitOk;
        }
        if (expert->parsed()) {
            const EnvConfig cfg = expert_cfg.resolve(seed);
            const auto spec = get_task(task);
            if (episodes < 1) throw UsageError("--episodes must be at least 1");
            std::unique_ptr<DemoWriter> writer;
            if (!out_path.empty()) writer = std::make_unique<DemoWriter>(out_path, task, cfg);
            int successes = 0;
            std::vector<int> lengths;
            std::vector<std::uint64_t> failed;
            run_expert_episodes(spec, episodes, cfg, seed, workers, [&](Trajectory&& t) {
                if (writer) writer->write(t);
                if (t.success) {
                    ++successes;
                    lengths.push_back(static_cast<int>(t.transitions.size()));
                } else {
                    failed.push_back(t.seed);
                }
            });
            if (writer) writer->close();
            const double rate = static_cast<double>(successes) / episodes;
            out << "task " << task << ": " << successes << "/" << episodes << " succeeded\n";
            out << "steps (successful episodes): mean " << fixed(mean_steps(lengths), 2) << ", p50 "
                << percentile(lengths, 0.5) << ", p90 " << percentile(lengths, 0.9) << ", max "
                << percentile(lengths, 1.0) << '\n';
            for (auto s : failed) out << "failed seed " << s << '\n';
            out << "RESULT task=" << task << " success=" << fixed(rate, 4) << " mean_steps=" << fixed(mean_steps(lengths), 2)
                << '\n';
            return kExitOk;
        }
        if (bench->parsed()) {
            const EnvConfig cfg = bench_cfg.resolve(seed);
            if (envs < 1 || steps < 1) throw UsageError("--envs and --steps must be at least 1");
            auto measure = [&](int n) {
                VectorEnv vec(n, task, cfg, n);
                vec.reset();
                Rng rng(derive_seed(seed, static_cast<std::uint64_t>(n)));
                std::vector<ActionVec> actions(static_cast<std::size_t>(n));
                double busy = 0.0;
                for (int s = 0; s < steps; ++s) {
                    for (int i = 0; i < n; ++i) actions[static_cast<std::size_t>(i)] = random_action(vec.env(i), rng);
                    const auto t0 = std::chrono::steady_clock::now();
                    vec.step(actions);
                    busy += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                }
                return static_cast<double>(n) * steps / busy;
            };
            const double single = measure(1);
            const double aggregate = measure(envs);
            out << "single env: " << fixed(single, 1) << " steps/s\n";
            out << envs << " envs: " << fixed(aggregate, 1) << " steps/s (" << fixed(aggregate / single, 2)
                << "x single, " << std::thread::hardware_concurrency() << " hardware threads)\n";
            out << "RESULT task=" << task << " envs=" << envs << " single=" << fixed(single, 1)
                << " aggregate=" << fixed(aggregate, 1) << " ratio=" << fixed(aggregate / single, 3) << '\n';
            return kExitOk;
        }
        if (render->parsed()) {
            const EnvConfig cfg = render_cfg.resolve(seed);
            const auto spec = get_task(task);
            std::filesystem::create_directories(out_dir);
            const Trajectory t = expert_episode(spec, cfg, seed);
            for (std::size_t i = 0; i < t.transitions.size(); ++i) {
                const auto& o = t.transitions[i].obs;
                export_png(o.heightmap, std::filesystem::path(out_dir) / ("obs_" + std::to_string(i) + ".png"),
                           cfg.workspace.z_max);
                export_png(o.in_hand, std::filesystem::path(out_dir) / ("inhand_" + std::to_string(i) + ".png"),
                           cfg.workspace.z_max);
            }
            out << "wrote " << t.transitions.size() << " steps to " << out_dir
                << (t.success ? "" : " (expert did not reach the goal)") << '\n';
            return t.success ? kExitOk : kExitFailure;
        }
        if (serve->parsed()) {
            if (use_stdio) {
                FdStream s(0, 1);
                serve_stream(s, workers);
                return kExitOk;
            }
            if (port < 0 || port > 65535) throw UsageError("--port out of range");
            TcpServer server(host, static_cast<std::uint16_t>(port), workers);
            err << "listening on " << host << ":" << server.port() << '\n';
            server.run();
            return kExitOk;
        }
        if (validate->parsed()) {
            out << to_config_text(validate_cfg.resolve(seed));
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace barm
