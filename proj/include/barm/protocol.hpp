#pragma once

// Framed binary protocol for driving a VectorEnv from another process.
//
// Frame: u32 payload length, u8 message type, payload. All integers and floats little-endian.

#include "barm/bytes.hpp"
#include "barm/errors.hpp"
#include "barm/runner.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace barm {

enum class MsgType : std::uint8_t {
    Config = 0x01,   // u16 n, u16 task length, task, config text (rest of payload)
    Reset = 0x02,    // empty
    Step = 0x03,     // n x f32[5]
    Expert = 0x04,   // empty
    Close = 0x05,    // empty
    Ack = 0x80,      // after CONFIG: u16 n, u32 obs_size, u32 in_hand_size; after CLOSE: empty
    Obs = 0x81,      // n x (f32 heightmap[obs^2], f32 in-hand[in^2], u8 gripper, f32 reward, u8 done)
    Actions = 0x82,  // n x f32[5]
    Error = 0xFF,    // u16 code, UTF-8 message
};

enum class WireError : std::uint16_t {
    NotReady = 0x0001,     // STEP/EXPERT before CONFIG and RESET, RESET before CONFIG
    Malformed = 0x0002,    // connection is closed after this reply
    Arity = 0x0003,        // wrong action count or unusable action values
    BadConfig = 0x0004,    // unknown task or invalid config
    UnknownType = 0x0005,
    Internal = 0x0006,
};

inline constexpr std::uint32_t kMaxFramePayload = 64u << 20;
inline constexpr std::uint16_t kDefaultPort = 9147;
inline constexpr std::size_t kActionBytes = 5 * sizeof(float);

struct Frame {
    MsgType type = MsgType::Ack;
    std::vector<std::uint8_t> payload;
};

// Byte stream over a transport. read_some returns 0 at end of stream.
class Stream {
public:
    virtual ~Stream() = default;
    virtual std::size_t read_some(std::uint8_t* dst, std::size_t n) = 0;
    virtual void write_all(const std::uint8_t* src, std::size_t n) = 0;
};

// Stream over file descriptors (a socket, or stdin/stdout). Owns neither.
class FdStream : public Stream {
public:
    FdStream(int in_fd, int out_fd) : in_(in_fd), out_(out_fd) {}
    std::size_t read_some(std::uint8_t* dst, std::size_t n) override;
    void write_all(const std::uint8_t* src, std::size_t n) override;

private:
    int in_;
    int out_;
};

// Raised for frame-level problems: oversize length, truncated frame, broken transport.
class ProtocolError : public Error {
public:
    using Error::Error;
};

// An ERROR frame received by the client.
class RemoteError : public Error {
public:
    RemoteError(std::uint16_t code, const std::string& message)
        : Error("server error " + std::to_string(code) + ": " + message), code_(code) {}
    std::uint16_t code() const noexcept { return code_; }

private:
    std::uint16_t code_;
};

// nullopt on a clean end of stream before a frame starts.
std::optional<Frame> read_frame(Stream& s);
void write_frame(Stream& s, const Frame& f);
std::vector<std::uint8_t> encode_frame(const Frame& f);

struct ConfigRequest {
    std::uint16_t n = 1;
    std::string task;
    std::string config_text;
};

struct ConfigAck {
    std::uint16_t n = 0;
    std::uint32_t obs_size = 0;
    std::uint32_t in_hand_size = 0;
};

struct ObsBatch {
    std::vector<Observation> obs;
    std::vector<float> rewards;
    std::vector<bool> dones;
};

std::vector<std::uint8_t> encode_config(const ConfigRequest& r);
ConfigRequest decode_config(std::span<const std::uint8_t> payload);  // throws FormatError
std::vector<std::uint8_t> encode_config_ack(const ConfigAck& a);
ConfigAck decode_config_ack(std::span<const std::uint8_t> payload);
std::vector<std::uint8_t> encode_actions(std::span<const ActionVec> actions);
std::vector<ActionVec> decode_actions(std::span<const std::uint8_t> payload);  // throws FormatError
std::vector<std::uint8_t> encode_obs(const ObsBatch& b);
ObsBatch decode_obs(std::span<const std::uint8_t> payload, int n, int obs_size, int in_hand_size);
Frame error_frame(WireError code, const std::string& message);

// Server side of one connection, independent of the transport.
class Session {
public:
    explicit Session(int workers = 1) : workers_(workers) {}

    struct Reply {
        Frame frame;
        bool close = false;
    };
    Reply handle(const Frame& request);

private:
    Reply configure(const Frame& f);

    int workers_;
    std::unique_ptr<VectorEnv> env_;
};

// Runs one session over a stream until CLOSE, a malformed frame or end of stream.
void serve_stream(Stream& s, int workers = 1);

// TCP listener; each connection gets its own thread and session.
class TcpServer {
public:
    // Port 0 picks a free port. Throws IoError when binding fails.
    TcpServer(const std::string& host, std::uint16_t port, int workers = 1);
    ~TcpServer();

    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    std::uint16_t port() const { return port_; }
    void start();  // accept loop on a background thread
    void run();    // accept loop on the calling thread, until stop()
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::uint16_t port_ = 0;
};

// Blocking client. Methods throw RemoteError for ERROR replies and ProtocolError when the
// connection breaks.
class Client {
public:
    static Client connect_tcp(const std::string& host, std::uint16_t port);
    explicit Client(std::unique_ptr<Stream> stream, int owned_fd = -1);
    Client(Client&&) noexcept;
    Client& operator=(Client&&) noexcept;
    ~Client();

    ConfigAck configure(int n, const std::string& task, const EnvConfig& cfg);
    ConfigAck configure_text(int n, const std::string& task, const std::string& config_text);
    ObsBatch reset();
    ObsBatch step(std::span<const ActionVec> actions);
    std::vector<ActionVec> expert();
    void close();

    // Sends a raw frame and returns the raw reply (nullopt if the server hung up).
    std::optional<Frame> request(const Frame& f);

private:
    Frame expect(const Frame& f, MsgType reply);

    std::unique_ptr<Stream> stream_;
    int fd_ = -1;
    ConfigAck ack_;
};

}  // namespace barm
