#pragma once

// Shared test machinery: scripted randomness, temp dirs, process spawning
// and a byte-capturing TCP proxy for wire-level secrecy scans.

#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "zkn/bytes.hpp"
#include "zkn/net.hpp"
#include "zkn/rng.hpp"

namespace zkt {

// Replays a fixed byte script; throws when the script runs dry. Used to
// force specific nonces, challenge bits and simulator draws.
class ScriptedRandomSource final : public zkn::RandomSource {
public:
    explicit ScriptedRandomSource(zkn::Bytes script) : script_(std::move(script)) {}

    void fill(std::uint8_t* out, std::size_t n) override {
        if (pos_ + n > script_.size())
            throw std::runtime_error("scripted randomness exhausted");
        std::copy(script_.begin() + pos_, script_.begin() + pos_ + n, out);
        pos_ += n;
    }

    std::size_t consumed() const { return pos_; }

private:
    zkn::Bytes script_;
    std::size_t pos_ = 0;
};

class TempDir {
public:
    TempDir() {
        char tmpl[] = "/tmp/zkn-test-XXXXXX";
        if (!mkdtemp(tmpl)) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return path_ + "/" + name; }
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

struct CommandResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

// Runs a shell command, captures combined output and the exit code.
inline CommandResult run_command(const std::string& command) {
    CommandResult result;
    std::FILE* pipe = popen((command + " 2>&1").c_str(), "r");
    if (!pipe) throw std::runtime_error("popen failed");
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof(buf), pipe))
        result.output.append(buf, n);
    int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

// A long-running child process (e.g. `zkn serve`) whose stdout we read
// line by line while it runs.
class BackgroundProcess {
public:
    explicit BackgroundProcess(const std::string& command)
        : pipe_(popen((command + " 2>&1").c_str(), "r")) {
        if (!pipe_) throw std::runtime_error("popen failed");
    }
    ~BackgroundProcess() {
        if (pipe_) pclose(pipe_);
    }

    std::string read_line() {
        char buf[4096];
        if (!std::fgets(buf, sizeof(buf), pipe_))
            throw std::runtime_error("background process closed its output");
        std::string line(buf);
        while (!line.empty() && (line.back() == '\n' || line.back() == '\r'))
            line.pop_back();
        return line;
    }

    int wait() {
        int status = pclose(pipe_);
        pipe_ = nullptr;
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

private:
    std::FILE* pipe_;
};

// Accepts one client, forwards bytes to/from an upstream endpoint and
// records everything that crosses in either direction.
class CapturingProxy {
public:
    CapturingProxy(const std::string& upstream_host, std::uint16_t upstream_port)
        : listener_("127.0.0.1", 0),
          upstream_host_(upstream_host),
          upstream_port_(upstream_port) {
        port_ = listener_.port();
        thread_ = std::thread([this] { pump(); });
    }
    ~CapturingProxy() { join(); }

    std::uint16_t port() const { return port_; }

    zkn::Bytes join() {
        if (thread_.joinable()) thread_.join();
        return captured_;
    }

private:
    void pump() {
        std::optional<zkn::Socket> client = listener_.accept(10'000);
        if (!client) return;
        zkn::Socket upstream = zkn::connect_to(upstream_host_, upstream_port_);
        pollfd fds[2] = {{client->fd(), POLLIN, 0}, {upstream.fd(), POLLIN, 0}};
        bool open[2] = {true, true};
        while (open[0] || open[1]) {
            fds[0].events = open[0] ? POLLIN : 0;
            fds[1].events = open[1] ? POLLIN : 0;
            if (::poll(fds, 2, 10'000) <= 0) break;
            for (int side = 0; side < 2; ++side) {
                if (!(fds[side].revents & (POLLIN | POLLHUP))) continue;
                std::uint8_t buf[4096];
                ssize_t n = ::recv(fds[side].fd, buf, sizeof(buf), 0);
                if (n <= 0) {
                    open[side] = false;
                    ::shutdown(fds[1 - side].fd, SHUT_WR);
                    continue;
                }
                captured_.insert(captured_.end(), buf, buf + n);
                zkn::ByteView chunk(buf, static_cast<std::size_t>(n));
                if (side == 0)
                    upstream.send_all(chunk);
                else
                    client->send_all(chunk);
            }
        }
    }

    zkn::TcpListener listener_;
    std::string upstream_host_;
    std::uint16_t upstream_port_ = 0;
    std::uint16_t port_ = 0;
    std::thread thread_;
    zkn::Bytes captured_;
};

// True if `needle` occurs anywhere in `haystack`.
inline bool contains_bytes(zkn::ByteView haystack, zkn::ByteView needle) {
    if (needle.empty() || needle.size() > haystack.size()) return false;
    for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i)
        if (std::equal(needle.begin(), needle.end(), haystack.begin() + i)) return true;
    return false;
}

// True if any window of `width` consecutive bytes from `secret` occurs in
// `haystack`.
inline bool leaks_window(zkn::ByteView haystack, zkn::ByteView secret,
                         std::size_t width = 4) {
    if (secret.size() < width) return contains_bytes(haystack, secret);
    for (std::size_t i = 0; i + width <= secret.size(); ++i)
        if (contains_bytes(haystack, secret.subspan(i, width))) return true;
    return false;
}

}  // namespace zkt
