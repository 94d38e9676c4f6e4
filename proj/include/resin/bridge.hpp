#pragma once
// Socket bridge: external processes join the bus over a local stream
// socket speaking newline-delimited JSON.
//
// Each line a client sends is either a control object
//   {"subscribe": "/channel"}
// or a message object
//   {"channel": "/a", "type": "probability", "value": 0.3, "timestamp": 1.5}
//   {"channel": "/d", "type": "density", "mean": 30.0, "stddev": 5.0, "timestamp": 2.0}
// (types: "boolean" with value true/false, "number", "probability",
// "density" with mean/stddev). Messages are published onto the bus;
// publications on subscribed channels are written back to the client in
// the same schema. Malformed input earns an {"error": "..."} line.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "resin/bus.hpp"

namespace resin {

// ---------------------------------------------------------------------------
// Wire schema.
// ---------------------------------------------------------------------------

inline const char* wire_type_name(SignalType t) {
    switch (t) {
        case SignalType::Boolean: return "boolean";
        case SignalType::Number: return "number";
        case SignalType::Probability: return "probability";
        case SignalType::Density: return "density";
    }
    return "?";
}

inline std::string to_wire(const BusMessage& msg) {
    nlohmann::json j;
    j["channel"] = msg.channel;
    j["type"] = wire_type_name(msg.value.type);
    switch (msg.value.type) {
        case SignalType::Boolean: j["value"] = msg.value.value != 0.0; break;
        case SignalType::Number:
        case SignalType::Probability: j["value"] = msg.value.value; break;
        case SignalType::Density:
            j["mean"] = msg.value.mean;
            j["stddev"] = msg.value.stddev;
            break;
    }
    j["timestamp"] = msg.timestamp;
    return j.dump();
}

// Parses one wire line into a message. On failure returns nullopt and,
// when `error` is given, a human-readable reason.
inline std::optional<BusMessage> from_wire(const std::string& line, std::string* error = nullptr) {
    const auto fail = [&](const std::string& why) -> std::optional<BusMessage> {
        if (error != nullptr) *error = why;
        return std::nullopt;
    };
    const nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) return fail("malformed JSON");
    if (!j.contains("channel") || !j["channel"].is_string()) return fail("missing field: channel");
    if (!j.contains("type") || !j["type"].is_string()) return fail("missing field: type");
    if (!j.contains("timestamp") || !j["timestamp"].is_number())
        return fail("missing field: timestamp");

    BusMessage msg;
    msg.channel = j["channel"].get<std::string>();
    msg.timestamp = j["timestamp"].get<double>();
    const std::string type = j["type"].get<std::string>();
    try {
        if (type == "boolean") {
            if (!j.contains("value") || !j["value"].is_boolean())
                return fail("boolean messages need a true/false value");
            msg.value = TypedValue::boolean(j["value"].get<bool>());
        } else if (type == "number") {
            if (!j.contains("value") || !j["value"].is_number())
                return fail("number messages need a numeric value");
            msg.value = TypedValue::number(j["value"].get<double>());
        } else if (type == "probability") {
            if (!j.contains("value") || !j["value"].is_number())
                return fail("probability messages need a numeric value");
            msg.value = TypedValue::probability(j["value"].get<double>());
        } else if (type == "density") {
            if (!j.contains("mean") || !j["mean"].is_number() || !j.contains("stddev") ||
                !j["stddev"].is_number())
                return fail("density messages need numeric mean and stddev");
            msg.value = TypedValue::density(j["mean"].get<double>(), j["stddev"].get<double>());
        } else {
            return fail("unknown type '" + type + "'");
        }
    } catch (const Error& e) {
        return fail(e.what());
    }
    return msg;
}

// ---------------------------------------------------------------------------
// Small blocking line-oriented socket wrapper shared by server and client.
// ---------------------------------------------------------------------------

namespace detail {

class LineSocket {
public:
    LineSocket() = default;
    explicit LineSocket(int fd) : fd_(fd) {}
    LineSocket(const LineSocket&) = delete;
    LineSocket& operator=(const LineSocket&) = delete;
    LineSocket(LineSocket&& o) noexcept : fd_(o.fd_), buf_(std::move(o.buf_)) { o.fd_ = -1; }
    ~LineSocket() { close(); }

    bool valid() const { return fd_ >= 0; }
    int fd() const { return fd_; }

    void close() {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }
    void shutdown() {
        if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
    }

    bool write_line(const std::string& line) {
        std::string out = line;
        out.push_back('\n');
        std::size_t sent = 0;
        while (sent < out.size()) {
            const ssize_t n = ::send(fd_, out.data() + sent, out.size() - sent, MSG_NOSIGNAL);
            if (n <= 0) return false;
            sent += static_cast<std::size_t>(n);
        }
        return true;
    }

    // Waits up to the timeout for a full line (without the newline).
    std::optional<std::string> read_line(double timeout_seconds) {
        const auto deadline = std::chrono::steady_clock::now() +
                              std::chrono::duration<double>(timeout_seconds);
        for (;;) {
            const auto nl = buf_.find('\n');
            if (nl != std::string::npos) {
                std::string line = buf_.substr(0, nl);
                buf_.erase(0, nl + 1);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return line;
            }
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0) return std::nullopt;
            pollfd pfd{fd_, POLLIN, 0};
            const int pr = ::poll(&pfd, 1, static_cast<int>(left.count()));
            if (pr <= 0) {
                if (pr == 0) return std::nullopt;
                if (errno == EINTR) continue;
                return std::nullopt;
            }
            char chunk[4096];
            const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
            if (n <= 0) return std::nullopt;  // closed or error
            buf_.append(chunk, static_cast<std::size_t>(n));
        }
    }

private:
    int fd_ = -1;
    std::string buf_;
};

} // namespace detail

// ---------------------------------------------------------------------------
// Server.
// ---------------------------------------------------------------------------

class BridgeServer {
public:
    explicit BridgeServer(Bus& bus) : bus_(bus) {}
    ~BridgeServer() { stop(); }

    // Binds a TCP listener; port 0 picks an ephemeral port. Returns the
    // actual port.
    int listen_tcp(const std::string& host, int port) {
        const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd < 0) throw ConfigError("bridge: cannot create socket");
        const int one = 1;
        ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(static_cast<uint16_t>(port));
        if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
            ::close(fd);
            throw ConfigError("bridge: bad listen address '" + host + "'");
        }
        if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
            ::listen(fd, 16) != 0) {
            ::close(fd);
            throw ConfigError("bridge: cannot bind " + host + ":" + std::to_string(port));
        }
        socklen_t len = sizeof addr;
        ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
        listen_fd_ = fd;
        port_ = static_cast<int>(ntohs(addr.sin_port));
        return port_;
    }

    void listen_unix(const std::string& path) {
        if (path.size() + 1 > sizeof(sockaddr_un{}.sun_path))
            throw ConfigError("bridge: unix socket path too long");
        const int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
        if (fd < 0) throw ConfigError("bridge: cannot create socket");
        ::unlink(path.c_str());
        sockaddr_un addr{};
        addr.sun_family = AF_UNIX;
        std::strncpy(addr.sun_path, path.c_str(), sizeof(addr.sun_path) - 1);
        if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
            ::listen(fd, 16) != 0) {
            ::close(fd);
            throw ConfigError("bridge: cannot bind unix socket '" + path + "'");
        }
        listen_fd_ = fd;
        unix_path_ = path;
    }

    void start() {
        if (listen_fd_ < 0) throw ConfigError("bridge: start() before listen");
        running_ = true;
        accept_thread_ = std::thread([this] { accept_loop(); });
    }

    void stop() {
        if (!running_.exchange(false)) {
            if (listen_fd_ >= 0) {
                ::close(listen_fd_);
                listen_fd_ = -1;
            }
            return;
        }
        ::shutdown(listen_fd_, SHUT_RDWR);
        ::close(listen_fd_);
        listen_fd_ = -1;
        if (accept_thread_.joinable()) accept_thread_.join();
        std::lock_guard<std::mutex> lock(clients_mutex_);
        for (auto& c : clients_) {
            c->sock.shutdown();
            if (c->reader.joinable()) c->reader.join();
            if (c->writer.joinable()) c->writer.join();
        }
        clients_.clear();
        if (!unix_path_.empty()) ::unlink(unix_path_.c_str());
    }

    int port() const { return port_; }
    std::size_t clients_served() const { return served_; }
    std::size_t wire_errors() const { return wire_errors_; }

private:
    struct Client {
        explicit Client(int fd) : sock(fd) {}
        detail::LineSocket sock;
        std::mutex write_mutex;
        Subscription sub;
        std::atomic<bool> open{true};
        std::thread reader;
        std::thread writer;
    };

    void accept_loop() {
        while (running_) {
            const int cfd = ::accept(listen_fd_, nullptr, nullptr);
            if (cfd < 0) {
                if (running_ && (errno == EINTR || errno == ECONNABORTED)) continue;
                break;
            }
            ++served_;
            auto client = std::make_unique<Client>(cfd);
            Client* c = client.get();
            c->reader = std::thread([this, c] { reader_loop(*c); });
            c->writer = std::thread([this, c] { writer_loop(*c); });
            std::lock_guard<std::mutex> lock(clients_mutex_);
            clients_.push_back(std::move(client));
        }
    }

    void send_to(Client& c, const std::string& line) {
        std::lock_guard<std::mutex> lock(c.write_mutex);
        if (!c.sock.write_line(line)) c.open = false;
    }

    void reader_loop(Client& c) {
        while (running_ && c.open) {
            const auto line = c.sock.read_line(0.25);
            if (!line.has_value()) {
                if (!c.sock.valid()) break;
                // timeout: poll again unless the peer is gone
                pollfd pfd{c.sock.fd(), POLLIN, 0};
                if (::poll(&pfd, 1, 0) > 0 && (pfd.revents & (POLLHUP | POLLERR)) != 0) break;
                continue;
            }
            if (line->empty()) continue;
            handle_line(c, *line);
        }
        c.open = false;
    }

    void handle_line(Client& c, const std::string& line) {
        const nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_object() && j.contains("subscribe")) {
            if (!j["subscribe"].is_string()) {
                ++wire_errors_;
                send_to(c, R"({"error":"subscribe needs a channel string"})");
                return;
            }
            bus_.attach(c.sub, j["subscribe"].get<std::string>());
            return;
        }
        std::string why;
        const auto msg = from_wire(line, &why);
        if (!msg.has_value()) {
            ++wire_errors_;
            nlohmann::json err;
            err["error"] = why;
            send_to(c, err.dump());
            return;
        }
        try {
            bus_.publish(*msg);
        } catch (const Error& e) {
            ++wire_errors_;
            nlohmann::json err;
            err["error"] = e.what();
            send_to(c, err.dump());
        }
    }

    void writer_loop(Client& c) {
        while (running_ && c.open) {
            if (!c.sub) {
                std::this_thread::sleep_for(std::chrono::milliseconds(5));
                continue;
            }
            const auto msg = c.sub.pop_wait(0.05);
            if (msg.has_value()) send_to(c, to_wire(*msg));
        }
    }

    Bus& bus_;
    int listen_fd_ = -1;
    int port_ = 0;
    std::string unix_path_;
    std::atomic<bool> running_{false};
    std::thread accept_thread_;
    std::mutex clients_mutex_;
    std::vector<std::unique_ptr<Client>> clients_;
    std::atomic<std::size_t> served_{0};
    std::atomic<std::size_t> wire_errors_{0};
};

// ---------------------------------------------------------------------------
// Client (used by tests and external tooling).
// ---------------------------------------------------------------------------

class BridgeClient {
public:
    static BridgeClient connect_tcp(const std::string& host, int port) {
        const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd < 0) throw ConfigError("bridge client: cannot create socket");
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(static_cast<uint16_t>(port));
        if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1 ||
            ::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
            ::close(fd);
            throw ConfigError("bridge client: cannot connect to " + host + ":" +
                              std::to_string(port));
        }
        return BridgeClient(fd);
    }

    static BridgeClient connect_unix(const std::string& path) {
        const int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
        if (fd < 0) throw ConfigError("bridge client: cannot create socket");
        sockaddr_un addr{};
        addr.sun_family = AF_UNIX;
        std::strncpy(addr.sun_path, path.c_str(), sizeof(addr.sun_path) - 1);
        if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
            ::close(fd);
            throw ConfigError("bridge client: cannot connect to unix socket '" + path + "'");
        }
        return BridgeClient(fd);
    }

    void subscribe(const std::string& channel) {
        nlohmann::json j;
        j["subscribe"] = channel;
        send_line(j.dump());
    }

    void send(const BusMessage& msg) { send_line(to_wire(msg)); }

    void send_line(const std::string& line) {
        if (!sock_.write_line(line)) throw ConfigError("bridge client: connection lost");
    }

    std::optional<std::string> recv_line(double timeout_seconds) {
        return sock_.read_line(timeout_seconds);
    }

    // Next parseable message within the timeout; error lines are surfaced
    // through last_error().
    std::optional<BusMessage> recv(double timeout_seconds) {
        const auto deadline = std::chrono::steady_clock::now() +
                              std::chrono::duration<double>(timeout_seconds);
        for (;;) {
            const auto left = std::chrono::duration<double>(
                deadline - std::chrono::steady_clock::now()).count();
            if (left <= 0) return std::nullopt;
            const auto line = recv_line(left);
            if (!line.has_value()) return std::nullopt;
            const auto msg = from_wire(*line, &last_error_);
            if (msg.has_value()) return msg;
        }
    }

    const std::string& last_error() const { return last_error_; }
    void close() { sock_.close(); }

private:
    explicit BridgeClient(int fd) : sock_(fd) {}
    detail::LineSocket sock_;
    std::string last_error_;
};

} // namespace resin
