#include "barm/config.hpp"

#include "barm/errors.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <sstream>

namespace barm {
namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(std::string_view key, std::string_view v) {
    double out = 0.0;
    const auto t = trim(v);
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc{} || p != t.data() + t.size() || !std::isfinite(out)) {
        throw ConfigError(std::string(key), "expected a number, got '" + std::string(v) + "'");
    }
    return out;
}

template <class Int>
Int parse_int(std::string_view key, std::string_view v) {
    Int out{};
    const auto t = trim(v);
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc{} || p != t.data() + t.size()) {
        throw ConfigError(std::string(key), "expected an integer, got '" + std::string(v) + "'");
    }
    return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
    std::string s(trim(v));
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError(std::string(key), "expected true/false, got '" + std::string(v) + "'");
}

std::vector<double> parse_list(std::string_view key, std::string_view v) {
    std::vector<double> out;
    std::string s(v);
    for (char& c : s) {
        if (c == '[' || c == ']' || c == '(' || c == ')') c = ' ';
    }
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto part = trim(std::string_view(s).substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (!part.empty()) out.push_back(parse_double(key, part));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string fmt_double(double v) {
    std::array<char, 64> buf{};
    const auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), p);
}

}  // namespace

double gripper_open_width(std::string_view robot) {
    if (robot == "kuka" || robot == "panda" || robot == "ur5") return 0.08;
    if (robot == "ur5_robotiq") return 0.085;
    throw ConfigError("robot", "unknown robot '" + std::string(robot) + "'");
}

void apply_config_value(EnvConfig& cfg, std::string_view key, std::string_view value) {
    const auto v = trim(value);
    if (key == "robot") {
        cfg.robot = std::string(v);
    } else if (key == "action_sequence") {
        cfg.action_sequence = std::string(v);
    } else if (key == "workspace") {
        const auto vals = parse_list(key, v);
        if (vals.size() != 6) throw ConfigError("workspace", "expected 6 numbers x_min,x_max,y_min,y_max,z_min,z_max");
        cfg.workspace = {vals[0], vals[1], vals[2], vals[3], vals[4], vals[5]};
    } else if (key == "object_scale_range") {
        const auto vals = parse_list(key, v);
        if (vals.size() == 1) {
            cfg.object_scale_min = cfg.object_scale_max = vals[0];
        } else if (vals.size() == 2) {
            cfg.object_scale_min = vals[0];
            cfg.object_scale_max = vals[1];
        } else {
            throw ConfigError("object_scale_range", "expected one or two numbers");
        }
    } else if (key == "max_steps") {
        cfg.max_steps = parse_int<int>(key, v);
    } else if (key == "num_objects") {
        cfg.num_objects = parse_int<int>(key, v);
    } else if (key == "obs_size") {
        cfg.obs_size = parse_int<int>(key, v);
    } else if (key == "in_hand_size") {
        cfg.in_hand_size = parse_int<int>(key, v);
    } else if (key == "fast_mode") {
        cfg.fast_mode = parse_bool(key, v);
    } else if (key == "render") {
        cfg.render = parse_bool(key, v);
    } else if (key == "random_orientation") {
        cfg.random_orientation = parse_bool(key, v);
    } else if (key == "half_rotation") {
        cfg.half_rotation = parse_bool(key, v);
    } else if (key == "workspace_check") {
        if (v == "point") {
            cfg.workspace_check = WorkspaceCheck::Point;
        } else if (v == "bounding_box") {
            cfg.workspace_check = WorkspaceCheck::BoundingBox;
        } else {
            throw ConfigError("workspace_check", "expected point or bounding_box");
        }
    } else if (key == "seed") {
        cfg.seed = parse_int<std::uint64_t>(key, v);
    } else {
        throw ConfigError(std::string(key), "unknown key");
    }
}

void validate_config(const EnvConfig& cfg) {
    gripper_open_width(cfg.robot);

    const std::string_view order = "pxyzr";
    std::size_t last = 0;
    bool seen_any = false;
    for (char c : cfg.action_sequence) {
        const auto pos = order.find(c);
        if (pos == std::string_view::npos || (seen_any && pos <= last)) {
            throw ConfigError("action_sequence", "must be an ordered subset of 'pxyzr'");
        }
        last = pos;
        seen_any = true;
    }
    if (cfg.action_sequence.find('x') == std::string::npos || cfg.action_sequence.find('y') == std::string::npos) {
        throw ConfigError("action_sequence", "must contain x and y");
    }

    const auto& w = cfg.workspace;
    if (!(w.x_max > w.x_min && w.y_max > w.y_min && w.z_max > w.z_min)) {
        throw ConfigError("workspace", "bounds must be increasing");
    }
    if (std::abs((w.x_max - w.x_min) - (w.y_max - w.y_min)) > 1e-9) {
        throw ConfigError("workspace", "x and y extents must be equal");
    }
    if (w.z_min != 0.0) {
        throw ConfigError("workspace", "z range must start at the ground (0)");
    }
    if (!(cfg.object_scale_min > 0.0 && cfg.object_scale_max >= cfg.object_scale_min)) {
        throw ConfigError("object_scale_range", "must be positive and ordered");
    }
    if (cfg.max_steps < 0) throw ConfigError("max_steps", "must be >= 0");
    if (cfg.num_objects < 0) throw ConfigError("num_objects", "must be >= 0");
    if (cfg.obs_size < 8 || cfg.obs_size > 1024) throw ConfigError("obs_size", "must be in [8, 1024]");
    if (cfg.in_hand_size < 4 || cfg.in_hand_size > 256) throw ConfigError("in_hand_size", "must be in [4, 256]");
}

EnvConfig parse_config_text(std::string_view text, std::string* task) {
    EnvConfig cfg;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = trim(text.substr(start, end - start));
        start = end + 1;
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(std::string(line), "expected key=value");
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (task != nullptr && key == "task") {
            *task = std::string(value);
            continue;
        }
        apply_config_value(cfg, key, value);
    }
    validate_config(cfg);
    return cfg;
}

std::string to_config_text(const EnvConfig& cfg) {
    std::ostringstream os;
    const auto& w = cfg.workspace;
    os << "robot=" << cfg.robot << '\n'
       << "action_sequence=" << cfg.action_sequence << '\n'
       << "workspace=" << fmt_double(w.x_min) << ',' << fmt_double(w.x_max) << ',' << fmt_double(w.y_min) << ','
       << fmt_double(w.y_max) << ',' << fmt_double(w.z_min) << ',' << fmt_double(w.z_max) << '\n'
       << "object_scale_range=" << fmt_double(cfg.object_scale_min) << ',' << fmt_double(cfg.object_scale_max)
       << '\n'
       << "max_steps=" << cfg.max_steps << '\n'
       << "num_objects=" << cfg.num_objects << '\n'
       << "obs_size=" << cfg.obs_size << '\n'
       << "in_hand_size=" << cfg.in_hand_size << '\n'
       << "fast_mode=" << (cfg.fast_mode ? "true" : "false") << '\n'
       << "render=" << (cfg.render ? "true" : "false") << '\n'
       << "random_orientation=" << (cfg.random_orientation ? "true" : "false") << '\n'
       << "half_rotation=" << (cfg.half_rotation ? "true" : "false") << '\n'
       << "workspace_check=" << (cfg.workspace_check == WorkspaceCheck::Point ? "point" : "bounding_box") << '\n'
       << "seed=" << cfg.seed << '\n';
    return os.str();
}

GridSpec grid_of(const EnvConfig& cfg, int size) {
    return GridSpec{cfg.workspace.x_min, cfg.workspace.x_max, cfg.workspace.y_min, cfg.workspace.y_max, size};
}

}  // namespace barm
