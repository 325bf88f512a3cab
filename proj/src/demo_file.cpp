#include "barm/demo_file.hpp"

#include "barm/errors.hpp"

#include <cstring>

namespace barm {
namespace {

template <class T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_floats(std::ofstream& out, const std::vector<float>& v) {
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
}

std::string header_text(const std::string& task, const EnvConfig& cfg) { return "task=" + task + "\n" + to_config_text(cfg); }

}  // namespace

std::uint64_t transition_bytes(const EnvConfig& cfg) {
    const auto obs = static_cast<std::uint64_t>(cfg.obs_size);
    const auto in = static_cast<std::uint64_t>(cfg.in_hand_size);
    return (obs * obs + in * in) * 4 + 1 + 5 * 4 + 4 + 1;
}

DemoWriter::DemoWriter(const std::string& path, const std::string& task, const EnvConfig& cfg)
    : path_(path), cfg_(cfg), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot create demo file '" + path + "'");
    const std::string text = header_text(task, cfg);
    out_.write(kDemoMagic, 4);
    put(out_, kDemoVersion);
    put(out_, static_cast<std::uint32_t>(text.size()));
    out_.write(text.data(), static_cast<std::streamsize>(text.size()));
    count_pos_ = out_.tellp();
    put(out_, std::uint32_t{0});
    if (!out_) throw IoError("write failed on '" + path + "'");
}

DemoWriter::~DemoWriter() {
    try {
        close();
    } catch (...) {
    }
}

void DemoWriter::write(const Trajectory& t) {
    if (!out_.is_open()) throw UsageError("demo writer is closed");
    const auto obs = static_cast<std::size_t>(cfg_.obs_size);
    const auto in = static_cast<std::size_t>(cfg_.in_hand_size);
    for (const auto& tr : t.transitions) {
        if (tr.obs.heightmap.data.size() != obs * obs || tr.obs.in_hand.data.size() != in * in) {
            throw InvalidInput("transition image sizes do not match the demo config");
        }
    }
    put(out_, static_cast<std::uint32_t>(t.transitions.size()));
    for (const auto& tr : t.transitions) {
        put_floats(out_, tr.obs.heightmap.data);
        put_floats(out_, tr.obs.in_hand.data);
        put(out_, static_cast<std::uint8_t>(tr.obs.holding ? 1 : 0));
        out_.write(reinterpret_cast<const char*>(tr.action.data()), sizeof(float) * tr.action.size());
        put(out_, tr.reward);
        put(out_, static_cast<std::uint8_t>(tr.done ? 1 : 0));
    }
    if (!out_) throw IoError("write failed on '" + path_ + "'");
    ++count_;
}

void DemoWriter::close() {
    if (!out_.is_open()) return;
    out_.seekp(count_pos_);
    put(out_, count_);
    out_.close();
    if (!out_) throw IoError("write failed on '" + path_ + "'");
}

DemoReader::DemoReader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open demo file '" + path + "'");
    char magic[4];
    read_exact(magic, 4, "magic");
    if (std::memcmp(magic, kDemoMagic, 4) != 0) throw FormatError(0, "bad magic");
    const std::uint64_t version_at = offset_;
    const auto version = read<std::uint16_t>("version");
    if (version != kDemoVersion) throw FormatError(version_at, "unsupported version " + std::to_string(version));
    const auto len = read<std::uint32_t>("config length");
    const std::uint64_t text_at = offset_;
    std::string text(len, '\0');
    read_exact(text.data(), len, "config text");
    try {
        cfg_ = parse_config_text(text, &task_);
        validate_config(cfg_);
    } catch (const ConfigError& e) {
        throw FormatError(text_at, std::string("bad config: ") + e.what());
    }
    if (task_.empty()) throw FormatError(text_at, "config has no task line");
    count_ = read<std::uint32_t>("episode count");
}

void DemoReader::read_exact(void* dst, std::size_t n, const char* what) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(in_.gcount());
    if (got != n) throw FormatError(offset_ + got, std::string("truncated ") + what);
    offset_ += n;
}

std::optional<Trajectory> DemoReader::next() {
    if (read_ == count_) {
        if (in_.peek() != std::char_traits<char>::eof()) throw FormatError(offset_, "trailing bytes");
        return std::nullopt;
    }
    const auto obs = cfg_.obs_size;
    const auto in = cfg_.in_hand_size;
    Trajectory t;
    t.task = task_;
    const auto n = read<std::uint32_t>("transition count");
    t.transitions.resize(n);
    for (auto& tr : t.transitions) {
        tr.obs.heightmap = HeightImage(obs);
        tr.obs.in_hand = HeightImage(in);
        read_exact(tr.obs.heightmap.data.data(), tr.obs.heightmap.data.size() * sizeof(float), "heightmap");
        read_exact(tr.obs.in_hand.data.data(), tr.obs.in_hand.data.size() * sizeof(float), "in-hand image");
        const std::uint64_t flag_at = offset_;
        const auto g = read<std::uint8_t>("gripper flag");
        if (g > 1) throw FormatError(flag_at, "gripper flag must be 0 or 1");
        tr.obs.holding = g == 1;
        read_exact(tr.action.data(), sizeof(float) * tr.action.size(), "action");
        tr.reward = read<float>("reward");
        const std::uint64_t done_at = offset_;
        const auto d = read<std::uint8_t>("done flag");
        if (d > 1) throw FormatError(done_at, "done flag must be 0 or 1");
        tr.done = d == 1;
    }
    t.success = !t.transitions.empty() && t.transitions.back().reward == 1.0f;
    ++read_;
    return t;
}

void save_demos(const std::string& path, const DemoSet& demos) {
    DemoWriter w(path, demos.task, demos.config);
    for (const auto& t : demos.episodes) w.write(t);
    w.close();
}

DemoSet load_demos(const std::string& path) {
    DemoReader r(path);
    DemoSet out{r.task(), r.config(), {}};
    while (auto t = r.next()) out.episodes.push_back(std::move(*t));
    return out;
}

}  // namespace barm
