#pragma once

// Demonstration files: a config header followed by recorded transitions.
//
// Layout (little-endian): "BARM", u16 version, u32 config length, config text (key=value
// lines including task=<name>), u32 episode count, then per episode a u32 transition count
// and per transition: f32 heightmap[obs*obs], f32 in-hand[in*in], u8 gripper, f32 action[5]
// (p, x, y, z, r; NaN where unused), f32 reward, u8 done.

#include "barm/planners.hpp"

#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace barm {

inline constexpr char kDemoMagic[4] = {'B', 'A', 'R', 'M'};
inline constexpr std::uint16_t kDemoVersion = 1;

// Writes episodes as they arrive; the episode count is filled in by close().
class DemoWriter {
public:
    // Throws IoError when the file cannot be created.
    DemoWriter(const std::string& path, const std::string& task, const EnvConfig& cfg);
    ~DemoWriter();

    DemoWriter(const DemoWriter&) = delete;
    DemoWriter& operator=(const DemoWriter&) = delete;

    // Throws InvalidInput when image sizes do not match the config.
    void write(const Trajectory& t);
    void close();
    std::uint32_t count() const { return count_; }

private:
    std::string path_;
    EnvConfig cfg_;
    std::ofstream out_;
    std::streamoff count_pos_ = 0;
    std::uint32_t count_ = 0;
};

// Reads episodes one at a time. Decoding problems raise FormatError with the byte offset.
class DemoReader {
public:
    explicit DemoReader(const std::string& path);

    const std::string& task() const { return task_; }
    const EnvConfig& config() const { return cfg_; }
    std::uint32_t episode_count() const { return count_; }

    // nullopt after the last episode (trailing bytes are an error).
    std::optional<Trajectory> next();

private:
    void read_exact(void* dst, std::size_t n, const char* what);
    template <class T>
    T read(const char* what) {
        T v;
        read_exact(&v, sizeof(T), what);
        return v;
    }

    std::ifstream in_;
    std::uint64_t offset_ = 0;
    std::string task_;
    EnvConfig cfg_;
    std::uint32_t count_ = 0;
    std::uint32_t read_ = 0;
};

struct DemoSet {
    std::string task;
    EnvConfig config;
    std::vector<Trajectory> episodes;
};

void save_demos(const std::string& path, const DemoSet& demos);
DemoSet load_demos(const std::string& path);

// Bytes one transition occupies for a config.
std::uint64_t transition_bytes(const EnvConfig& cfg);

}  // namespace barm
