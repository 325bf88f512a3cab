#pragma once

#include "barm/geometry.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace barm {

enum class WorkspaceCheck { Point, BoundingBox };

struct Workspace {
    double x_min = 0.25;
    double x_max = 0.65;
    double y_min = -0.2;
    double y_max = 0.2;
    double z_min = 0.0;
    double z_max = 1.0;

    friend bool operator==(const Workspace&, const Workspace&) = default;
};

/// Environment configuration. Key names follow the documented parameter list;
/// `max_steps` and `num_objects` of 0 mean "use the task default".
struct EnvConfig {
    std::string robot = "kuka";
    std::string action_sequence = "pxyzr";
    Workspace workspace;
    double object_scale_min = 0.6;
    double object_scale_max = 0.6;
    int max_steps = 0;
    int num_objects = 0;
    int obs_size = 128;
    int in_hand_size = 24;
    bool fast_mode = true;
    bool render = false;
    bool random_orientation = true;
    bool half_rotation = true;
    WorkspaceCheck workspace_check = WorkspaceCheck::Point;
    std::uint64_t seed = 0;

    friend bool operator==(const EnvConfig&, const EnvConfig&) = default;
};

// Object sizes are nominal at this scale.
inline constexpr double kReferenceObjectScale = 0.6;

// Sets one key from its text value. Throws ConfigError for unknown keys or bad values.
void apply_config_value(EnvConfig& cfg, std::string_view key, std::string_view value);

// Throws ConfigError naming the first offending key.
void validate_config(const EnvConfig& cfg);

/// Parses a key=value document (one pair per line, '#' comments, blank lines ignored).
/// When `task` is non-null a `task=<name>` line is accepted and stored there;
/// otherwise it is rejected like any other unknown key.
EnvConfig parse_config_text(std::string_view text, std::string* task = nullptr);

// Canonical document listing every key; parse_config_text(to_config_text(c)) == c.
std::string to_config_text(const EnvConfig& cfg);

// Gripper opening for a named robot. Throws ConfigError for unknown robots.
double gripper_open_width(std::string_view robot);

GridSpec grid_of(const EnvConfig& cfg, int size);

}  // namespace barm
