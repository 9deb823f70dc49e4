#include "fogbench/adapter.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>

namespace fogbench {

using nlohmann::json;

std::string_view to_string(SutError e) {
    switch (e) {
        case SutError::none: return "none";
        case SutError::timeout: return "timeout";
        case SutError::unreachable: return "unreachable";
        case SutError::protocol: return "protocol";
        case SutError::remote: return "remote";
        case SutError::unsupported: return "unsupported";
    }
    return "?";
}

IngestReply Sut::ingest_event(const EventReport&, SimTime) {
    return {SutError::unsupported, "event reports not supported by this SUT"};
}

IngestReply ReferenceSut::ingest(const AnnotatedRecord& record, SimTime now) {
    try {
        last_ack_ = store_.insert(record, now);
    } catch (const std::exception& e) {
        return {SutError::remote, e.what()};
    }
    return {};
}

IngestReply ReferenceSut::ingest_event(const EventReport&, SimTime) {
    ++event_reports_;
    return {};
}

QueryReply ReferenceSut::query(const Query& q, const QueryOptions& options) {
    QueryReply reply;
    try {
        reply.result = store_.query(q, options);
    } catch (const std::exception& e) {
        reply.error = SutError::remote;
        reply.message = e.what();
    }
    return reply;
}

Endpoint parse_endpoint(const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
        throw std::invalid_argument("endpoint must be host:port, got '" + text + "'");
    }
    Endpoint ep;
    ep.host = text.substr(0, colon);
    try {
        ep.port = std::stoi(text.substr(colon + 1));
    } catch (const std::exception&) {
        throw std::invalid_argument("endpoint port is not a number: '" + text + "'");
    }
    if (ep.port <= 0 || ep.port > 65535) throw std::invalid_argument("endpoint port out of range");
    return ep;
}

// ---------------------------------------------------------------------------
// Connection

namespace {

void set_timeouts(int fd, double timeout_s) {
    timeval tv{};
    tv.tv_sec = static_cast<time_t>(timeout_s);
    tv.tv_usec = static_cast<suseconds_t>((timeout_s - static_cast<double>(tv.tv_sec)) * 1e6);
    ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

void write_all(int fd, const std::string& data) {
    std::size_t off = 0;
    while (off < data.size()) {
        const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            if (errno == EAGAIN || errno == EWOULDBLOCK) throw SutTimeout("send timed out");
            throw SutUnreachable(std::string("send failed: ") + std::strerror(errno));
        }
        off += static_cast<std::size_t>(n);
    }
}

// Returns false on EOF before any byte was read.
bool read_all(int fd, char* buf, std::size_t len) {
    std::size_t off = 0;
    while (off < len) {
        const ssize_t n = ::recv(fd, buf + off, len - off, 0);
        if (n == 0) {
            if (off == 0) return false;
            throw wire::ProtocolError("connection closed mid-frame");
        }
        if (n < 0) {
            if (errno == EINTR) continue;
            if (errno == EAGAIN || errno == EWOULDBLOCK) throw SutTimeout("receive timed out");
            throw SutUnreachable(std::string("recv failed: ") + std::strerror(errno));
        }
        off += static_cast<std::size_t>(n);
    }
    return true;
}

}  // namespace

Connection::~Connection() { close(); }

Connection::Connection(Connection&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

Connection& Connection::operator=(Connection&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = other.fd_;
        other.fd_ = -1;
    }
    return *this;
}

void Connection::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

Connection Connection::adopt(int fd, double timeout_s) {
    set_timeouts(fd, timeout_s);
    return Connection(fd);
}

Connection Connection::open(const Endpoint& ep, double timeout_s) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string port = std::to_string(ep.port);
    if (::getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res) != 0 || res == nullptr) {
        throw SutUnreachable("cannot resolve " + ep.host);
    }
    std::string last_error = "no address";
    for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
        const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        const int flags = ::fcntl(fd, F_GETFL, 0);
        ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
        int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
        if (rc < 0 && errno == EINPROGRESS) {
            pollfd p{fd, POLLOUT, 0};
            rc = ::poll(&p, 1, static_cast<int>(timeout_s * 1000));
            if (rc == 1) {
                int err = 0;
                socklen_t len = sizeof err;
                ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
                rc = err == 0 ? 0 : -1;
                if (err != 0) errno = err;
            } else {
                if (rc == 0) errno = ETIMEDOUT;
                rc = -1;
            }
        }
        if (rc == 0) {
            ::fcntl(fd, F_SETFL, flags);
            ::freeaddrinfo(res);
            return adopt(fd, timeout_s);
        }
        last_error = std::strerror(errno);
        ::close(fd);
    }
    ::freeaddrinfo(res);
    throw SutUnreachable("cannot connect to " + ep.host + ":" + port + ": " + last_error);
}

void Connection::send(const wire::Frame& frame) {
    if (fd_ < 0) throw SutUnreachable("connection closed");
    write_all(fd_, wire::encode(frame));
}

std::optional<wire::Frame> Connection::receive() {
    if (fd_ < 0) throw SutUnreachable("connection closed");
    unsigned char header[4];
    if (!read_all(fd_, reinterpret_cast<char*>(header), 4)) return std::nullopt;
    const std::uint32_t len = wire::decode_length(header);
    if (len == 0 || len > wire::kMaxFrameBytes) throw wire::ProtocolError("invalid frame length");
    std::string bytes(4 + static_cast<std::size_t>(len), '\0');
    std::memcpy(bytes.data(), header, 4);
    if (!read_all(fd_, bytes.data() + 4, len)) throw wire::ProtocolError("connection closed mid-frame");
    return wire::decode(bytes);
}

wire::Frame Connection::request(const wire::Frame& frame) {
    send(frame);
    auto reply = receive();
    if (!reply) throw SutUnreachable("connection closed by peer");
    return std::move(*reply);
}

// ---------------------------------------------------------------------------
// RemoteSut

RemoteSut::RemoteSut(Endpoint endpoint, int pool_size, double timeout_s, SutCapabilities caps)
    : endpoint_(std::move(endpoint)),
      timeout_s_(timeout_s),
      caps_(caps),
      pool_size_(static_cast<std::size_t>(std::max(1, pool_size))) {
    for (std::size_t i = 0; i < pool_size_; ++i) idle_.push_back(Connection::open(endpoint_, timeout_s_));
}

wire::Frame RemoteSut::round_trip(const wire::Frame& frame) {
    Connection conn;
    {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return !idle_.empty(); });
        conn = std::move(idle_.back());
        idle_.pop_back();
    }
    auto give_back = [&](Connection c) {
        {
            std::lock_guard lock(mu_);
            idle_.push_back(std::move(c));
        }
        cv_.notify_one();
    };
    try {
        if (!conn.valid()) conn = Connection::open(endpoint_, timeout_s_);
        wire::Frame reply = conn.request(frame);
        give_back(std::move(conn));
        return reply;
    } catch (...) {
        // The connection state is unknown after a failure; replace it lazily.
        conn.close();
        give_back(Connection{});
        throw;
    }
}

RemoteStats RemoteSut::stats() const {
    std::lock_guard lock(stats_mu_);
    return stats_;
}

IngestReply RemoteSut::ingest(const AnnotatedRecord& record, SimTime) {
    IngestReply reply;
    try {
        const wire::Frame res =
            round_trip({wire::Opcode::insert, json{{"record", wire::to_json(record)}}.dump()});
        if (res.opcode == wire::Opcode::ack) return reply;
        if (res.opcode == wire::Opcode::error) {
            reply.error = SutError::remote;
            reply.message = res.body;
        } else {
            reply.error = SutError::protocol;
            reply.message = "unexpected opcode in reply to INSERT";
        }
    } catch (const SutTimeout& e) {
        reply = {SutError::timeout, e.what()};
    } catch (const wire::ProtocolError& e) {
        reply = {SutError::protocol, e.what()};
    } catch (const SutUnreachable& e) {
        reply = {SutError::unreachable, e.what()};
    }
    std::lock_guard lock(stats_mu_);
    ++stats_.ingest_failures;
    if (reply.error == SutError::protocol) ++stats_.protocol_errors;
    if (reply.error == SutError::timeout) ++stats_.timeouts;
    return reply;
}

IngestReply RemoteSut::ingest_event(const EventReport& report, SimTime) {
    if (!caps_.supports_event_reports) return Sut::ingest_event(report, 0);
    IngestReply reply;
    try {
        const wire::Frame res =
            round_trip({wire::Opcode::insert, json{{"event_report", wire::to_json(report)}}.dump()});
        if (res.opcode == wire::Opcode::ack) return reply;
        reply = {res.opcode == wire::Opcode::error ? SutError::remote : SutError::protocol, res.body};
    } catch (const SutTimeout& e) {
        reply = {SutError::timeout, e.what()};
    } catch (const wire::ProtocolError& e) {
        reply = {SutError::protocol, e.what()};
    } catch (const SutUnreachable& e) {
        reply = {SutError::unreachable, e.what()};
    }
    std::lock_guard lock(stats_mu_);
    ++stats_.ingest_failures;
    if (reply.error == SutError::protocol) ++stats_.protocol_errors;
    if (reply.error == SutError::timeout) ++stats_.timeouts;
    return reply;
}

QueryReply RemoteSut::query(const Query& q, const QueryOptions& options) {
    QueryReply reply;
    try {
        const wire::Frame res = round_trip({wire::Opcode::query, wire::to_json(q).dump()});
        if (res.opcode == wire::Opcode::result) {
            reply.result = wire::result_from_json(wire::parse_body(res.body));
            if (reply.result.query_id != q.query_id) throw wire::ProtocolError("query_id mismatch");
            if (options.due_by && q.kind != QueryKind::scan_filter) {
                reply.result.due_count = std::count_if(
                    reply.result.records.begin(), reply.result.records.end(),
                    [&](const ResultRecord& r) { return r.gen_time <= *options.due_by; });
            }
            return reply;
        }
        if (res.opcode == wire::Opcode::error) {
            reply.error = SutError::remote;
            reply.message = res.body;
        } else {
            throw wire::ProtocolError("unexpected opcode in reply to QUERY");
        }
    } catch (const SutTimeout& e) {
        reply.error = SutError::timeout;
        reply.message = e.what();
    } catch (const wire::ProtocolError& e) {
        reply.error = SutError::protocol;
        reply.message = e.what();
    } catch (const SutUnreachable& e) {
        reply.error = SutError::unreachable;
        reply.message = e.what();
    }
    std::lock_guard lock(stats_mu_);
    ++stats_.query_failures;
    if (reply.error == SutError::protocol) ++stats_.protocol_errors;
    if (reply.error == SutError::timeout) ++stats_.timeouts;
    return reply;
}

// ---------------------------------------------------------------------------
// SutServer

SutServer::SutServer(TimeSeriesStore& store, std::string bind_host, int port)
    : store_(store), host_(std::move(bind_host)), port_(port) {}

SutServer::~SutServer() { stop(); }

void SutServer::start() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw std::runtime_error("server: socket failed");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port_));
    if (::inet_pton(AF_INET, host_.c_str(), &addr.sin_addr) != 1) {
        throw std::runtime_error("server: bad bind address " + host_);
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
        ::listen(listen_fd_, 64) != 0) {
        const std::string err = std::strerror(errno);
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw std::runtime_error("server: cannot listen on " + host_ + ": " + err);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    running_ = true;
    acceptor_ = std::thread([this] { accept_loop(); });
}

void SutServer::stop() {
    if (!running_.exchange(false)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
    if (acceptor_.joinable()) acceptor_.join();
    std::vector<std::thread> workers;
    {
        std::lock_guard lock(workers_mu_);
        for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
        workers.swap(workers_);
    }
    for (auto& t : workers) t.join();
    wait_cv_.notify_all();
}

void SutServer::wait() {
    std::unique_lock lock(wait_mu_);
    wait_cv_.wait(lock, [&] { return !running_.load(); });
}

void SutServer::accept_loop() {
    while (running_) {
        pollfd p{listen_fd_, POLLIN, 0};
        const int rc = ::poll(&p, 1, 100);
        if (rc <= 0) continue;
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) continue;
        std::lock_guard lock(workers_mu_);
        client_fds_.push_back(fd);
        workers_.emplace_back([this, fd] { serve(fd); });
    }
}

void SutServer::serve(int fd) {
    Connection conn = Connection::adopt(fd, 3600.0);
    while (running_) {
        std::optional<wire::Frame> req;
        try {
            req = conn.receive();
        } catch (const wire::ProtocolError& e) {
            try {
                conn.send({wire::Opcode::error, json{{"error", e.what()}}.dump()});
            } catch (...) {
            }
            break;
        } catch (...) {
            break;
        }
        if (!req) break;
        ++requests_;
        try {
            conn.send(handle(*req));
        } catch (...) {
            break;
        }
    }
    std::lock_guard lock(workers_mu_);
    client_fds_.erase(std::remove(client_fds_.begin(), client_fds_.end(), fd), client_fds_.end());
    // Connection destructor closes fd.
}

wire::Frame SutServer::handle(const wire::Frame& request) {
    using wire::Opcode;
    try {
        const json body = wire::parse_body(request.body);
        if (request.opcode == Opcode::insert) {
            std::lock_guard lock(store_mu_);
            if (body.contains("record")) {
                const AnnotatedRecord rec = wire::annotated_from_json(body["record"]);
                const auto now = std::chrono::duration_cast<std::chrono::nanoseconds>(
                                     std::chrono::steady_clock::now().time_since_epoch())
                                     .count();
                const InsertAck ack = store_.insert(rec, now);
                return {Opcode::ack, json{{"instance", ack.instance}}.dump()};
            }
            if (body.contains("event_report")) {
                (void)wire::event_report_from_json(body["event_report"]);
                ++event_reports_;
                return {Opcode::ack, json{{"instance", nullptr}}.dump()};
            }
            throw wire::ProtocolError("INSERT without record or event_report");
        }
        if (request.opcode == Opcode::query) {
            const Query q = wire::query_from_json(body);
            QueryResult r;
            {
                std::lock_guard lock(store_mu_);
                r = store_.query(q, QueryOptions{true, std::nullopt});
            }
            return {Opcode::result, wire::to_json(r).dump()};
        }
        throw wire::ProtocolError("unexpected request opcode");
    } catch (const std::exception& e) {
        return {Opcode::error, json{{"error", e.what()}}.dump()};
    }
}

}  // namespace fogbench
