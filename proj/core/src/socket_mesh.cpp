#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <cerrno>
#include <cstring>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "bnat/transport.hpp"
#include "bytes.hpp"
#include "round_buffer.hpp"

namespace bnat {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint8_t kHelloMagic[4] = {'B', 'N', 'H', 'L'};
constexpr std::size_t kHelloSize = 6;
// Refuses absurd length prefixes before allocating; ~128M doubles.
constexpr std::uint32_t kMaxFrameBytes = 1u << 30;

[[noreturn]] void throw_errno(const std::string& what) {
    throw ProtocolError(what + ": " + std::strerror(errno));
}

class Fd {
  public:
    Fd() = default;
    explicit Fd(int fd) : fd_(fd) {}
    Fd(Fd&& other) noexcept : fd_(other.release()) {}
    Fd& operator=(Fd&& other) noexcept {
        reset();
        fd_ = other.release();
        return *this;
    }
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    ~Fd() { reset(); }

    int get() const { return fd_; }
    bool valid() const { return fd_ >= 0; }
    int release() {
        int fd = fd_;
        fd_ = -1;
        return fd;
    }
    void reset() {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }

  private:
    int fd_ = -1;
};

void write_exact(int fd, const std::uint8_t* data, std::size_t size) {
    while (size > 0) {
        const ssize_t n = ::send(fd, data, size, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw_errno("send");
        }
        data += n;
        size -= static_cast<std::size_t>(n);
    }
}

/// False on clean EOF at a frame boundary (size bytes pending, none read).
bool read_exact(int fd, std::uint8_t* data, std::size_t size) {
    std::size_t got = 0;
    while (got < size) {
        const ssize_t n = ::recv(fd, data + got, size - got, 0);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw_errno("recv");
        }
        if (n == 0) {
            if (got == 0) return false;
            throw ProtocolError("connection closed mid-frame");
        }
        got += static_cast<std::size_t>(n);
    }
    return true;
}

void set_recv_deadline(int fd, Clock::time_point deadline) {
    auto remain = std::chrono::duration_cast<std::chrono::microseconds>(deadline - Clock::now());
    if (remain.count() <= 0) remain = std::chrono::microseconds(1);
    timeval tv{};
    tv.tv_sec = static_cast<time_t>(remain.count() / 1000000);
    tv.tv_usec = static_cast<suseconds_t>(remain.count() % 1000000);
    if (::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv) != 0)
        throw_errno("setsockopt SO_RCVTIMEO");
}

void clear_recv_deadline(int fd) {
    timeval tv{};
    if (::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv) != 0)
        throw_errno("setsockopt SO_RCVTIMEO");
}

void enable_nodelay(int fd) {
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

Fd open_listener(std::uint16_t port) {
    Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
    if (!fd.valid()) throw_errno("socket");
    const int one = 1;
    ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    addr.sin_port = htons(port);
    if (::bind(fd.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
        throw_errno("bind port " + std::to_string(port));
    if (::listen(fd.get(), SOMAXCONN) != 0) throw_errno("listen");
    return fd;
}

std::uint16_t bound_port(int fd) {
    sockaddr_in addr{};
    socklen_t len = sizeof addr;
    if (::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0)
        throw_errno("getsockname");
    return ntohs(addr.sin_port);
}

Fd dial(const std::string& host, std::uint16_t port, Clock::time_point deadline) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* found = nullptr;
    const std::string service = std::to_string(port);
    const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &found);
    if (rc != 0)
        throw ProtocolError("resolve " + host + ": " + gai_strerror(rc));
    const std::unique_ptr<addrinfo, decltype(&freeaddrinfo)> guard(found, &freeaddrinfo);

    // Retry until the peer's listener is up or the deadline passes; peers
    // may start in any order.
    while (true) {
        for (addrinfo* ai = found; ai; ai = ai->ai_next) {
            Fd fd(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
            if (!fd.valid()) continue;
            if (::connect(fd.get(), ai->ai_addr, ai->ai_addrlen) == 0) return fd;
        }
        if (Clock::now() >= deadline)
            throw TimeoutError("connect " + host + ":" + service + " timed out");
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
}

std::array<std::uint8_t, kHelloSize> make_hello(std::uint16_t node_id) {
    std::array<std::uint8_t, kHelloSize> hello{};
    std::copy(std::begin(kHelloMagic), std::end(kHelloMagic), hello.begin());
    hello[4] = static_cast<std::uint8_t>(node_id & 0xFF);
    hello[5] = static_cast<std::uint8_t>(node_id >> 8);
    return hello;
}

std::uint16_t read_hello(int fd) {
    std::array<std::uint8_t, kHelloSize> hello{};
    if (!read_exact(fd, hello.data(), hello.size()))
        throw ProtocolError("handshake: connection closed");
    if (!std::equal(std::begin(kHelloMagic), std::end(kHelloMagic), hello.begin()))
        throw ProtocolError("handshake: foreign protocol");
    return static_cast<std::uint16_t>(hello[4] | (hello[5] << 8));
}

struct Conn {
    Fd fd;
    std::uint16_t peer_id = 0;
    std::mutex write_mu;
    std::thread reader;
};

class SocketMesh final : public Transport {
  public:
    SocketMesh(const SocketConfig& config, Fd listener) : id_(config.node_id), buffer_([&] {
        std::vector<std::uint16_t> ids;
        for (const PeerAddress& p : config.peers) ids.push_back(p.node_id);
        return ids;
    }()) {
        const auto deadline = Clock::now() + config.connect_timeout;

        std::vector<PeerAddress> lower, higher;
        for (const PeerAddress& p : config.peers)
            (p.node_id < id_ ? lower : higher).push_back(p);
        std::sort(higher.begin(), higher.end(),
                  [](const PeerAddress& a, const PeerAddress& b) { return a.node_id < b.node_id; });

        // Every pair gets exactly one stream: lower ids dial, higher ids
        // accept. Accept the lower side first so our listener drains while
        // peers above us come up.
        try {
            accept_lower(listener, lower, deadline);
            for (const PeerAddress& peer : higher) dial_higher(peer, deadline);
        } catch (...) {
            close_all();
            throw;
        }
        for (auto& conn : conns_) start_reader(*conn);
    }

    ~SocketMesh() override {
        close_all();
        for (auto& conn : conns_)
            if (conn->reader.joinable()) conn->reader.join();
    }

    void broadcast(const RoundMessage& msg) override {
        if (msg.node_id != id_)
            throw ProtocolError("broadcast from node " + std::to_string(id_) +
                                " carries node_id " + std::to_string(msg.node_id));
        const std::vector<std::uint8_t> frame = encode_message(msg);
        std::vector<std::uint8_t> prefix;
        detail::put_u32(prefix, static_cast<std::uint32_t>(frame.size()));
        for (auto& conn : conns_) {
            std::lock_guard lock(conn->write_mu);
            write_exact(conn->fd.get(), prefix.data(), prefix.size());
            write_exact(conn->fd.get(), frame.data(), frame.size());
        }
    }

    std::vector<RoundMessage> gather(std::uint32_t round,
                                     std::chrono::milliseconds timeout) override {
        return buffer_.gather(round, timeout);
    }

    std::uint16_t node_id() const override { return id_; }
    std::size_t peer_count() const override { return conns_.size(); }

  private:
    void accept_lower(Fd& listener, const std::vector<PeerAddress>& lower,
                      Clock::time_point deadline) {
        if (lower.empty()) return;
        if (!listener.valid())
            throw ConfigError("node " + std::to_string(id_) +
                              " needs a listen port for lower-id peers");
        std::vector<std::uint16_t> expected;
        for (const PeerAddress& p : lower) expected.push_back(p.node_id);
        std::sort(expected.begin(), expected.end());

        std::vector<std::uint16_t> seen;
        while (seen.size() < expected.size()) {
            const auto remain =
                std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
            if (remain.count() <= 0)
                throw TimeoutError("node " + std::to_string(id_) +
                                   ": timed out waiting for inbound peers");
            pollfd pfd{listener.get(), POLLIN, 0};
            const int rc = ::poll(&pfd, 1, static_cast<int>(remain.count()));
            if (rc < 0) {
                if (errno == EINTR) continue;
                throw_errno("poll");
            }
            if (rc == 0) continue;
            Fd conn_fd(::accept(listener.get(), nullptr, nullptr));
            if (!conn_fd.valid()) continue;
            set_recv_deadline(conn_fd.get(), deadline);
            std::uint16_t peer;
            try {
                peer = read_hello(conn_fd.get());
            } catch (const ProtocolError&) {
                continue; // stray connection; drop it, keep waiting
            }
            if (!std::binary_search(expected.begin(), expected.end(), peer) ||
                std::find(seen.begin(), seen.end(), peer) != seen.end())
                continue;
            const auto hello = make_hello(id_);
            write_exact(conn_fd.get(), hello.data(), hello.size());
            clear_recv_deadline(conn_fd.get());
            enable_nodelay(conn_fd.get());
            seen.push_back(peer);
            add_conn(std::move(conn_fd), peer);
        }
    }

    void dial_higher(const PeerAddress& peer, Clock::time_point deadline) {
        Fd fd = dial(peer.host, peer.port, deadline);
        const auto hello = make_hello(id_);
        write_exact(fd.get(), hello.data(), hello.size());
        set_recv_deadline(fd.get(), deadline);
        const std::uint16_t answered = read_hello(fd.get());
        if (answered != peer.node_id)
            throw ProtocolError("dialed node " + std::to_string(peer.node_id) + " at " +
                                peer.host + ":" + std::to_string(peer.port) +
                                " but node " + std::to_string(answered) + " answered");
        clear_recv_deadline(fd.get());
        enable_nodelay(fd.get());
        add_conn(std::move(fd), peer.node_id);
    }

    void add_conn(Fd fd, std::uint16_t peer_id) {
        auto conn = std::make_unique<Conn>();
        conn->fd = std::move(fd);
        conn->peer_id = peer_id;
        conns_.push_back(std::move(conn));
    }

    void start_reader(Conn& conn) {
        conn.reader = std::thread([this, &conn] {
            try {
                while (true) {
                    std::uint8_t len_bytes[4];
                    if (!read_exact(conn.fd.get(), len_bytes, 4)) {
                        if (!closing_.load())
                            buffer_.close_peer(conn.peer_id, std::make_exception_ptr(ProtocolError(
                                "node " + std::to_string(conn.peer_id) + " disconnected")));
                        return;
                    }
                    const std::uint32_t len = detail::get_u32(len_bytes, 0);
                    if (len < 4 || len > kMaxFrameBytes)
                        throw ProtocolError("implausible frame length " + std::to_string(len));
                    std::vector<std::uint8_t> frame(len);
                    if (!read_exact(conn.fd.get(), frame.data(), frame.size()))
                        throw ProtocolError("connection closed mid-frame");
                    RoundMessage msg = decode_message(frame);
                    if (msg.node_id != conn.peer_id)
                        throw ProtocolError("frame from node " + std::to_string(msg.node_id) +
                                            " on node " + std::to_string(conn.peer_id) +
                                            "'s connection");
                    buffer_.deliver(std::move(msg));
                }
            } catch (...) {
                if (!closing_.load()) buffer_.close_peer(conn.peer_id, std::current_exception());
            }
        });
    }

    void close_all() {
        closing_.store(true);
        for (auto& conn : conns_) {
            if (conn->fd.valid()) ::shutdown(conn->fd.get(), SHUT_RDWR);
        }
    }

    std::uint16_t id_;
    detail::RoundBuffer buffer_;
    std::vector<std::unique_ptr<Conn>> conns_;
    std::atomic<bool> closing_{false};
};

void validate_socket_config(const SocketConfig& config) {
    if (config.node_id == 0) throw ConfigError("socket mesh: node_id must be at least 1");
    std::vector<std::uint16_t> ids{config.node_id};
    for (const PeerAddress& p : config.peers) {
        if (p.node_id == 0) throw ConfigError("socket mesh: peer node_id must be at least 1");
        ids.push_back(p.node_id);
    }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
        throw ConfigError("socket mesh: duplicate node ids");
}

} // namespace

std::unique_ptr<Transport> connect_socket_mesh(const SocketConfig& config) {
    validate_socket_config(config);
    const bool needs_listener = std::any_of(
        config.peers.begin(), config.peers.end(),
        [&](const PeerAddress& p) { return p.node_id < config.node_id; });
    Fd listener;
    if (needs_listener) listener = open_listener(config.listen_port);
    return std::make_unique<SocketMesh>(config, std::move(listener));
}

std::vector<std::unique_ptr<Transport>> make_loopback_mesh(std::size_t count) {
    if (count == 0) throw ConfigError("mesh: need at least one node");
    if (count > 64) throw ConfigError("loopback mesh: too many nodes");

    // Listeners come up before any mesh dials, so construction order can't
    // deadlock; ephemeral ports avoid collisions.
    std::vector<Fd> listeners;
    std::vector<std::uint16_t> ports;
    for (std::size_t i = 0; i < count; ++i) {
        Fd fd = open_listener(0);
        ports.push_back(bound_port(fd.get()));
        listeners.push_back(std::move(fd));
    }

    std::vector<SocketConfig> configs(count);
    for (std::size_t i = 0; i < count; ++i) {
        configs[i].node_id = static_cast<std::uint16_t>(i + 1);
        configs[i].listen_port = ports[i];
        for (std::size_t j = 0; j < count; ++j) {
            if (j == i) continue;
            configs[i].peers.push_back(
                {"127.0.0.1", ports[j], static_cast<std::uint16_t>(j + 1)});
        }
    }

    // Handshakes block until the counterpart exists, so all meshes must
    // come up in parallel.
    std::vector<std::unique_ptr<Transport>> meshes(count);
    std::vector<std::exception_ptr> errors(count);
    std::vector<std::thread> workers;
    for (std::size_t i = 0; i < count; ++i) {
        workers.emplace_back([&, i] {
            try {
                meshes[i] = std::make_unique<SocketMesh>(configs[i], std::move(listeners[i]));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return meshes;
}

} // namespace bnat
