#pragma once

// TCP plumbing: a client FrameTransport over a socket and the middleware
// listener. One thread per session; frames within a session are processed
// in order, store mutations are serialized inside ServerStore.

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cstring>
#include <string>
#include <thread>
#include <vector>

#include "fieldsync/errors.hpp"
#include "fieldsync/middleware.hpp"
#include "fieldsync/wire.hpp"

namespace fieldsync::net {

inline std::pair<std::string, std::uint16_t> split_endpoint(
    const std::string& endpoint) {
    auto colon = endpoint.rfind(':');
    if (colon == std::string::npos)
        throw ConfigError("endpoint must look like host:port, got \"" +
                          endpoint + "\"");
    std::string host = endpoint.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(endpoint.substr(colon + 1));
    } catch (const std::exception&) {
        throw ConfigError("bad port in endpoint \"" + endpoint + "\"");
    }
    // Port 0 asks the OS for an ephemeral port when binding.
    if (port < 0 || port > 65535)
        throw ConfigError("port out of range in \"" + endpoint + "\"");
    return {host.empty() ? "0.0.0.0" : host, static_cast<std::uint16_t>(port)};
}

class TcpTransport : public wire::FrameTransport {
public:
    static TcpTransport connect(const std::string& endpoint) {
        auto [host, port] = split_endpoint(endpoint);
        addrinfo hints{};
        hints.ai_family = AF_UNSPEC;
        hints.ai_socktype = SOCK_STREAM;
        addrinfo* res = nullptr;
        if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints,
                          &res) != 0)
            throw TransportError("cannot resolve " + endpoint);
        int fd = -1;
        for (addrinfo* ai = res; ai; ai = ai->ai_next) {
            fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
            if (fd < 0) continue;
            if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
            ::close(fd);
            fd = -1;
        }
        ::freeaddrinfo(res);
        if (fd < 0) throw TransportError("cannot connect to " + endpoint);
        int nodelay = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &nodelay, sizeof nodelay);
        return TcpTransport(fd);
    }

    explicit TcpTransport(int fd) : fd_(fd) {}
    TcpTransport(TcpTransport&& other) noexcept : fd_(other.fd_), buf_(std::move(other.buf_)) {
        other.fd_ = -1;
    }
    TcpTransport(const TcpTransport&) = delete;
    ~TcpTransport() {
        if (fd_ >= 0) ::close(fd_);
    }

    void send(const wire::Frame& frame) override {
        auto bytes = wire::encode_frame(frame);
        std::size_t off = 0;
        while (off < bytes.size()) {
            ssize_t n = ::send(fd_, bytes.data() + off, bytes.size() - off,
                               MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw TransportError(std::string("send failed: ") +
                                     std::strerror(errno));
            }
            off += static_cast<std::size_t>(n);
        }
    }

    std::optional<wire::Frame> recv(std::int64_t timeout_ms) override {
        auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::milliseconds(timeout_ms);
        while (true) {
            if (auto frame = wire::try_decode_frame(buf_)) return frame;
            auto now = std::chrono::steady_clock::now();
            auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 deadline - now)
                                 .count();
            if (remaining <= 0) return std::nullopt;
            pollfd pfd{fd_, POLLIN, 0};
            int ready = ::poll(&pfd, 1, static_cast<int>(remaining));
            if (ready < 0) {
                if (errno == EINTR) continue;
                throw TransportError(std::string("poll failed: ") +
                                     std::strerror(errno));
            }
            if (ready == 0) return std::nullopt;
            std::uint8_t chunk[4096];
            ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
            if (n == 0) throw TransportError("peer closed the connection");
            if (n < 0) {
                if (errno == EINTR) continue;
                throw TransportError(std::string("recv failed: ") +
                                     std::strerror(errno));
            }
            buf_.insert(buf_.end(), chunk, chunk + n);
        }
    }

private:
    int fd_ = -1;
    std::vector<std::uint8_t> buf_;
};

class TcpServer {
public:
    // Binds and starts accepting. Throws on bind failure.
    TcpServer(const std::string& endpoint, middleware::ServerStore& store)
        : store_(store) {
        auto [host, port] = split_endpoint(endpoint);
        listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (listen_fd_ < 0) throw TransportError("cannot create listen socket");
        int reuse = 1;
        ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &reuse, sizeof reuse);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(port);
        if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
            if (host == "localhost")
                ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
            else
                addr.sin_addr.s_addr = INADDR_ANY;
        }
        if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
            ::close(listen_fd_);
            throw TransportError("cannot bind " + endpoint + ": " +
                                 std::strerror(errno));
        }
        if (::listen(listen_fd_, 16) != 0) {
            ::close(listen_fd_);
            throw TransportError("listen failed on " + endpoint);
        }
        socklen_t len = sizeof addr;
        ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
        port_ = ntohs(addr.sin_port);
        accept_thread_ = std::thread([this] { accept_loop(); });
    }

    ~TcpServer() { stop(); }

    std::uint16_t port() const { return port_; }

    // Stops accepting, waits for in-flight sessions to finish.
    void stop() {
        bool expected = false;
        if (!stopping_.compare_exchange_strong(expected, true)) return;
        ::shutdown(listen_fd_, SHUT_RDWR);
        ::close(listen_fd_);
        if (accept_thread_.joinable()) accept_thread_.join();
        for (auto& t : sessions_)
            if (t.joinable()) t.join();
    }

private:
    void accept_loop() {
        while (!stopping_) {
            int fd = ::accept(listen_fd_, nullptr, nullptr);
            if (fd < 0) {
                if (stopping_) break;
                if (errno == EINTR) continue;
                break;
            }
            sessions_.emplace_back([this, fd] { session_loop(fd); });
        }
    }

    void session_loop(int fd) {
        TcpTransport transport(fd);
        middleware::SessionState session;
        try {
            while (!session.should_close) {
                auto frame = transport.recv(250);
                if (!frame) {
                    if (stopping_) break;
                    continue;
                }
                for (const auto& resp : store_.handle_frame(*frame, session))
                    transport.send(resp);
            }
        } catch (const TransportError&) {
            // client went away; session state dies with the connection
        } catch (const ProtocolError&) {
            try {
                transport.send(wire::make_nack(wire::kNullKey, "protocol"));
            } catch (...) {
            }
        }
    }

    middleware::ServerStore& store_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::thread accept_thread_;
    std::vector<std::thread> sessions_;
};

}  // namespace fieldsync::net
