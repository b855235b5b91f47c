#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <optional>
#include <string>
#include <utility>

#include "zkn/bytes.hpp"
#include "zkn/errors.hpp"

namespace zkn {

/// Connected TCP stream, move-only, closed on destruction.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
    Socket& operator=(Socket&& other) noexcept {
        if (this != &other) {
            close();
            fd_ = std::exchange(other.fd_, -1);
        }
        return *this;
    }
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket() { close(); }

    bool valid() const { return fd_ >= 0; }
    int fd() const { return fd_; }

    void close() {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

    void set_receive_timeout(std::uint32_t ms) {
        timeval tv{};
        tv.tv_sec = ms / 1000;
        tv.tv_usec = static_cast<suseconds_t>((ms % 1000) * 1000);
        ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
    }

    void send_all(ByteView data) {
        std::size_t sent = 0;
        while (sent < data.size()) {
            ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw TransportError(std::string("send failed: ") + std::strerror(errno));
            }
            sent += static_cast<std::size_t>(n);
        }
    }

    Bytes recv_exact(std::size_t n) {
        Bytes out(n);
        std::size_t got = 0;
        while (got < n) {
            ssize_t r = ::recv(fd_, out.data() + got, n - got, 0);
            if (r == 0) throw TransportError("connection closed by peer");
            if (r < 0) {
                if (errno == EINTR) continue;
                if (errno == EAGAIN || errno == EWOULDBLOCK)
                    throw TransportError("receive timed out");
                throw TransportError(std::string("recv failed: ") + std::strerror(errno));
            }
            got += static_cast<std::size_t>(r);
        }
        return out;
    }

private:
    int fd_ = -1;
};

/// Listening TCP socket. Port 0 binds an ephemeral port; port() reports
/// the one actually bound.
class TcpListener {
public:
    TcpListener(const std::string& host, std::uint16_t port) {
        fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd_ < 0) throw TransportError("socket() failed");
        int one = 1;
        ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(port);
        if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
            ::close(fd_);
            throw TransportError("cannot parse listen address: " + host);
        }
        if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
            ::close(fd_);
            throw TransportError("bind failed: " + std::string(std::strerror(errno)));
        }
        if (::listen(fd_, 16) != 0) {
            ::close(fd_);
            throw TransportError("listen failed");
        }
    }
    TcpListener(TcpListener&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;
    ~TcpListener() {
        if (fd_ >= 0) ::close(fd_);
    }

    std::uint16_t port() const {
        sockaddr_in addr{};
        socklen_t len = sizeof(addr);
        if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0)
            throw TransportError("getsockname failed");
        return ntohs(addr.sin_port);
    }

    std::optional<Socket> accept(std::uint32_t timeout_ms = 0) {
        if (timeout_ms > 0) {
            timeval tv{};
            tv.tv_sec = timeout_ms / 1000;
            tv.tv_usec = static_cast<suseconds_t>((timeout_ms % 1000) * 1000);
            ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
        }
        int client = ::accept(fd_, nullptr, nullptr);
        if (client < 0) {
            if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR)
                return std::nullopt;
            throw TransportError("accept failed");
        }
        return Socket(client);
    }

private:
    int fd_ = -1;
};

inline Socket connect_to(const std::string& host, std::uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* result = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &result) != 0)
        throw TransportError("cannot resolve host: " + host);
    int fd = -1;
    for (addrinfo* ai = result; ai; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(result);
    if (fd < 0) throw TransportError("cannot connect to " + host + ":" + std::to_string(port));
    return Socket(fd);
}

/// "host:port" -> (host, port).
inline std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& endpoint) {
    auto colon = endpoint.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == endpoint.size())
        throw ParseError("endpoint must be host:port, got '" + endpoint + "'");
    std::string host = endpoint.substr(0, colon);
    std::string port_str = endpoint.substr(colon + 1);
    if (port_str.find_first_not_of("0123456789") != std::string::npos)
        throw ParseError("invalid port: " + port_str);
    unsigned long port = std::stoul(port_str);
    if (port > 65535) throw ParseError("port out of range: " + port_str);
    return {host, static_cast<std::uint16_t>(port)};
}

}  // namespace zkn
