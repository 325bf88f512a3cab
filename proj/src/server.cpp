#include "barm/protocol.hpp"

#include "barm/errors.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <mutex>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <thread>
#include <unistd.h>

namespace barm {
namespace {

std::string errno_text() { return std::strerror(errno); }

void set_nodelay(int fd) {
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

}  // namespace

std::size_t FdStream::read_some(std::uint8_t* dst, std::size_t n) {
    while (true) {
        const ssize_t r = ::read(in_, dst, n);
        if (r >= 0) return static_cast<std::size_t>(r);
        if (errno == EINTR) continue;
        if (errno == ECONNRESET) return 0;
        throw ProtocolError("read failed: " + errno_text());
    }
}

void FdStream::write_all(const std::uint8_t* src, std::size_t n) {
    while (n > 0) {
        const ssize_t r = ::send(out_, src, n, MSG_NOSIGNAL);
        if (r < 0 && errno == ENOTSOCK) {
            const ssize_t w = ::write(out_, src, n);
            if (w < 0 && errno == EINTR) continue;
            if (w < 0) throw ProtocolError("write failed: " + errno_text());
            src += w;
            n -= static_cast<std::size_t>(w);
            continue;
        }
        if (r < 0 && errno == EINTR) continue;
        if (r < 0) throw ProtocolError("write failed: " + errno_text());
        src += r;
        n -= static_cast<std::size_t>(r);
    }
}

// --- server ----------------------------------------------------------------------

struct TcpServer::Impl {
    int listen_fd = -1;
    int workers = 1;
    std::thread acceptor;
    std::mutex mu;
    std::vector<int> conn_fds;
    std::vector<std::thread> conns;
    bool stopping = false;

    void accept_loop() {
        while (true) {
            const int fd = ::accept(listen_fd, nullptr, nullptr);
            if (fd < 0) {
                if (errno == EINTR) continue;
                return;  // listener closed by stop()
            }
            set_nodelay(fd);
            std::lock_guard lock(mu);
            if (stopping) {
                ::close(fd);
                return;
            }
            conn_fds.push_back(fd);
            conns.emplace_back([this, fd] {
                FdStream s(fd, fd);
                try {
                    serve_stream(s, workers);
                } catch (const std::exception&) {
                    // Transport failure ends this session only.
                }
                std::lock_guard l(mu);
                if (!stopping) {
                    std::erase(conn_fds, fd);
                    ::close(fd);
                }
            });
        }
    }
};

TcpServer::TcpServer(const std::string& host, std::uint16_t port, int workers) : impl_(std::make_unique<Impl>()) {
    impl_->workers = workers;
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw IoError("socket failed: " + errno_text());
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        throw IoError("bad bind address '" + host + "'");
    }
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd, 16) != 0) {
        const std::string why = errno_text();
        ::close(fd);
        throw IoError("cannot listen on " + host + ":" + std::to_string(port) + ": " + why);
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    impl_->listen_fd = fd;
}

TcpServer::~TcpServer() { stop(); }

void TcpServer::start() {
    impl_->acceptor = std::thread([this] { impl_->accept_loop(); });
}

void TcpServer::run() { impl_->accept_loop(); }

void TcpServer::stop() {
    if (!impl_) return;
    {
        std::lock_guard lock(impl_->mu);
        if (impl_->stopping) return;
        impl_->stopping = true;
        for (int fd : impl_->conn_fds) ::shutdown(fd, SHUT_RDWR);
    }
    ::shutdown(impl_->listen_fd, SHUT_RDWR);
    ::close(impl_->listen_fd);
    if (impl_->acceptor.joinable()) impl_->acceptor.join();
    for (auto& t : impl_->conns) t.join();
    for (int fd : impl_->conn_fds) ::close(fd);
}

// --- client ----------------------------------------------------------------------

Client Client::connect_tcp(const std::string& host, std::uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res) {
        throw ProtocolError("cannot resolve '" + host + "'");
    }
    const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (fd < 0 || ::connect(fd, res->ai_addr, res->ai_addrlen) != 0) {
        const std::string why = errno_text();
        ::freeaddrinfo(res);
        if (fd >= 0) ::close(fd);
        throw ProtocolError("cannot connect to " + host + ":" + std::to_string(port) + ": " + why);
    }
    ::freeaddrinfo(res);
    set_nodelay(fd);
    return Client(std::make_unique<FdStream>(fd, fd), fd);
}

Client::Client(std::unique_ptr<Stream> stream, int owned_fd) : stream_(std::move(stream)), fd_(owned_fd) {}

Client::Client(Client&& o) noexcept : stream_(std::move(o.stream_)), fd_(o.fd_), ack_(o.ack_) { o.fd_ = -1; }

Client& Client::operator=(Client&& o) noexcept {
    if (this != &o) {
        if (fd_ >= 0) ::close(fd_);
        stream_ = std::move(o.stream_);
        fd_ = o.fd_;
        ack_ = o.ack_;
        o.fd_ = -1;
    }
    return *this;
}

Client::~Client() {
    if (fd_ >= 0) ::close(fd_);
}

std::optional<Frame> Client::request(const Frame& f) {
    if (!stream_) throw ProtocolError("client is closed");
    write_frame(*stream_, f);
    return read_frame(*stream_);
}

Frame Client::expect(const Frame& f, MsgType reply) {
    auto r = request(f);
    if (!r) throw ProtocolError("server closed the connection");
    if (r->type == MsgType::Error) {
        ByteReader br(r->payload);
        const auto code = br.get<std::uint16_t>();
        throw RemoteError(code, br.get_string(br.remaining()));
    }
    if (r->type != reply) {
        throw ProtocolError("unexpected reply type " + std::to_string(static_cast<int>(r->type)));
    }
    return std::move(*r);
}

ConfigAck Client::configure(int n, const std::string& task, const EnvConfig& cfg) {
    return configure_text(n, task, to_config_text(cfg));
}

ConfigAck Client::configure_text(int n, const std::string& task, const std::string& config_text) {
    const ConfigRequest req{static_cast<std::uint16_t>(n), task, config_text};
    const Frame r = expect({MsgType::Config, encode_config(req)}, MsgType::Ack);
    ack_ = decode_config_ack(r.payload);
    return ack_;
}

ObsBatch Client::reset() {
    const Frame r = expect({MsgType::Reset, {}}, MsgType::Obs);
    return decode_obs(r.payload, ack_.n, static_cast<int>(ack_.obs_size), static_cast<int>(ack_.in_hand_size));
}

ObsBatch Client::step(std::span<const ActionVec> actions) {
    const Frame r = expect({MsgType::Step, encode_actions(actions)}, MsgType::Obs);
    return decode_obs(r.payload, ack_.n, static_cast<int>(ack_.obs_size), static_cast<int>(ack_.in_hand_size));
}

std::vector<ActionVec> Client::expert() {
    const Frame r = expect({MsgType::Expert, {}}, MsgType::Actions);
    return decode_actions(r.payload);
}

void Client::close() {
    if (!stream_) return;
    try {
        expect({MsgType::Close, {}}, MsgType::Ack);
    } catch (const ProtocolError&) {
    }
    stream_.reset();
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
}

}  // namespace barm
