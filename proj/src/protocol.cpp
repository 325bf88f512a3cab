#include "barm/protocol.hpp"

#include "barm/bytes.hpp"
#include "barm/errors.hpp"
#include "barm/planners.hpp"

namespace barm {

std::vector<std::uint8_t> encode_frame(const Frame& f) {
    ByteWriter w;
    w.put(static_cast<std::uint32_t>(f.payload.size()));
    w.put(static_cast<std::uint8_t>(f.type));
    w.put_bytes(f.payload);
    return w.take();
}

std::optional<Frame> read_frame(Stream& s) {
    std::uint8_t header[5];
    std::size_t got = 0;
    while (got < sizeof header) {
        const std::size_t n = s.read_some(header + got, sizeof header - got);
        if (n == 0) {
            if (got == 0) return std::nullopt;
            throw ProtocolError("connection closed inside a frame header");
        }
        got += n;
    }
    std::uint32_t len;
    std::memcpy(&len, header, 4);
    if (len > kMaxFramePayload) throw ProtocolError("frame length " + std::to_string(len) + " exceeds the limit");
    Frame f{static_cast<MsgType>(header[4]), std::vector<std::uint8_t>(len)};
    got = 0;
    while (got < len) {
        const std::size_t n = s.read_some(f.payload.data() + got, len - got);
        if (n == 0) throw ProtocolError("connection closed inside a frame payload");
        got += n;
    }
    return f;
}

void write_frame(Stream& s, const Frame& f) {
    const auto bytes = encode_frame(f);
    s.write_all(bytes.data(), bytes.size());
}

std::vector<std::uint8_t> encode_config(const ConfigRequest& r) {
    ByteWriter w;
    w.put(r.n);
    w.put(static_cast<std::uint16_t>(r.task.size()));
    w.put_string(r.task);
    w.put_string(r.config_text);
    return w.take();
}

ConfigRequest decode_config(std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    ConfigRequest out;
    out.n = r.get<std::uint16_t>();
    const auto len = r.get<std::uint16_t>();
    out.task = r.get_string(len);
    out.config_text = r.get_string(r.remaining());
    return out;
}

std::vector<std::uint8_t> encode_config_ack(const ConfigAck& a) {
    ByteWriter w;
    w.put(a.n);
    w.put(a.obs_size);
    w.put(a.in_hand_size);
    return w.take();
}

ConfigAck decode_config_ack(std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    ConfigAck a;
    a.n = r.get<std::uint16_t>();
    a.obs_size = r.get<std::uint32_t>();
    a.in_hand_size = r.get<std::uint32_t>();
    return a;
}

std::vector<std::uint8_t> encode_actions(std::span<const ActionVec> actions) {
    ByteWriter w;
    for (const auto& a : actions) w.put_floats(a);
    return w.take();
}

std::vector<ActionVec> decode_actions(std::span<const std::uint8_t> payload) {
    if (payload.size() % kActionBytes != 0) {
        throw FormatError(payload.size() - payload.size() % kActionBytes, "action payload is not a multiple of 20 bytes");
    }
    ByteReader r(payload);
    std::vector<ActionVec> out(payload.size() / kActionBytes);
    for (auto& a : out) r.get_floats(a);
    return out;
}

std::vector<std::uint8_t> encode_obs(const ObsBatch& b) {
    ByteWriter w;
    for (std::size_t i = 0; i < b.obs.size(); ++i) {
        w.put_floats(b.obs[i].heightmap.data);
        w.put_floats(b.obs[i].in_hand.data);
        w.put(static_cast<std::uint8_t>(b.obs[i].holding ? 1 : 0));
        w.put(b.rewards[i]);
        w.put(static_cast<std::uint8_t>(b.dones[i] ? 1 : 0));
    }
    return w.take();
}

ObsBatch decode_obs(std::span<const std::uint8_t> payload, int n, int obs_size, int in_hand_size) {
    ByteReader r(payload);
    ObsBatch b;
    for (int i = 0; i < n; ++i) {
        Observation o;
        o.heightmap = HeightImage(obs_size);
        o.in_hand = HeightImage(in_hand_size);
        r.get_floats(o.heightmap.data);
        r.get_floats(o.in_hand.data);
        o.holding = r.get<std::uint8_t>() != 0;
        b.rewards.push_back(r.get<float>());
        b.dones.push_back(r.get<std::uint8_t>() != 0);
        b.obs.push_back(std::move(o));
    }
    if (r.remaining() != 0) throw FormatError(r.offset(), "trailing bytes in observation payload");
    return b;
}

Frame error_frame(WireError code, const std::string& message) {
    ByteWriter w;
    w.put(static_cast<std::uint16_t>(code));
    w.put_string(message);
    return {MsgType::Error, w.take()};
}

Session::Reply Session::configure(const Frame& f) {
    ConfigRequest req;
    try {
        req = decode_config(f.payload);
    } catch (const FormatError& e) {
        return {error_frame(WireError::Malformed, std::string("bad CONFIG payload: ") + e.what()), true};
    }
    if (req.n < 1) return {error_frame(WireError::BadConfig, "environment count must be at least 1"), false};
    try {
        const EnvConfig cfg = parse_config_text(req.config_text);
        env_ = std::make_unique<VectorEnv>(req.n, req.task, cfg, workers_);
    } catch (const ConfigError& e) {
        env_.reset();
        return {error_frame(WireError::BadConfig, e.what()), false};
    }
    const auto& cfg = env_->config();
    const ConfigAck ack{req.n, static_cast<std::uint32_t>(cfg.obs_size), static_cast<std::uint32_t>(cfg.in_hand_size)};
    return {{MsgType::Ack, encode_config_ack(ack)}, false};
}

Session::Reply Session::handle(const Frame& f) {
    try {
        switch (f.type) {
            case MsgType::Config: return configure(f);
            case MsgType::Reset: {
                if (!env_) return {error_frame(WireError::NotReady, "RESET before CONFIG"), false};
                if (!f.payload.empty()) return {error_frame(WireError::Malformed, "RESET takes no payload"), true};
                ObsBatch b;
                b.obs = env_->reset();
                b.rewards.assign(b.obs.size(), 0.0f);
                b.dones.assign(b.obs.size(), false);
                return {{MsgType::Obs, encode_obs(b)}, false};
            }
            case MsgType::Step: {
                if (!env_ || !env_->started()) return {error_frame(WireError::NotReady, "STEP before CONFIG and RESET"), false};
                std::vector<ActionVec> actions;
                try {
                    actions = decode_actions(f.payload);
                } catch (const FormatError& e) {
                    return {error_frame(WireError::Malformed, e.what()), true};
                }
                BatchStep s;
                try {
                    s = env_->step(actions);
                } catch (const ActionFormatError& e) {
                    return {error_frame(WireError::Arity, e.what()), false};
                }
                ObsBatch b{std::move(s.obs), std::move(s.rewards), std::move(s.dones)};
                return {{MsgType::Obs, encode_obs(b)}, false};
            }
            case MsgType::Expert: {
                if (!env_ || !env_->started()) return {error_frame(WireError::NotReady, "EXPERT before CONFIG and RESET"), false};
                if (!f.payload.empty()) return {error_frame(WireError::Malformed, "EXPERT takes no payload"), true};
                return {{MsgType::Actions, encode_actions(env_->get_next_action())}, false};
            }
            case MsgType::Close:
                if (env_) env_->close();
                return {{MsgType::Ack, {}}, true};
            default:
                return {error_frame(WireError::UnknownType,
                                    "unknown message type " + std::to_string(static_cast<int>(f.type))),
                        false};
        }
    } catch (const std::exception& e) {
        return {error_frame(WireError::Internal, e.what()), false};
    }
}

void serve_stream(Stream& s, int workers) {
    Session session(workers);
    while (true) {
        std::optional<Frame> f;
        try {
            f = read_frame(s);
        } catch (const ProtocolError& e) {
            // Oversized or cut-off frame: say why (best effort) and hang up.
            try {
                write_frame(s, error_frame(WireError::Malformed, e.what()));
            } catch (...) {
            }
            return;
        }
        if (!f) return;
        const auto reply = session.handle(*f);
        write_frame(s, reply.frame);
        if (reply.close) return;
    }
}

}  // namespace barm
