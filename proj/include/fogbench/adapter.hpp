// The system-under-test boundary. The harness talks to an SUT only through
// `Sut`: ingest of annotated records (and optionally event reports) and
// queries. `ReferenceSut` binds the in-process store; `RemoteSut` speaks
// the framed wire protocol to an external process; `SutServer` exposes a
// reference store over that protocol.

#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fogbench/store.hpp"
#include "fogbench/wire.hpp"

namespace fogbench {

enum class SutMode { in_process, external };

struct SutCapabilities {
    bool supports_event_reports = false;
    bool supports_scan = true;
};

enum class SutError { none, timeout, unreachable, protocol, remote, unsupported };

std::string_view to_string(SutError e);

struct IngestReply {
    SutError error = SutError::none;
    std::string message;
    bool ok() const { return error == SutError::none; }
};

struct QueryReply {
    SutError error = SutError::none;
    std::string message;
    QueryResult result;
    bool ok() const { return error == SutError::none; }
};

class Sut {
public:
    virtual ~Sut() = default;
    virtual SutMode mode() const = 0;
    virtual SutCapabilities capabilities() const = 0;

    /// `now` is the harness clock at delivery.
    virtual IngestReply ingest(const AnnotatedRecord& record, SimTime now) = 0;
    virtual IngestReply ingest_event(const EventReport& report, SimTime now);

    /// Remote bindings always return materialized records; `due_by` is
    /// evaluated on the returned payload.
    virtual QueryReply query(const Query& q, const QueryOptions& options) = 0;
};

class ReferenceSut final : public Sut {
public:
    explicit ReferenceSut(TimeSeriesStore& store) : store_(store) {}

    SutMode mode() const override { return SutMode::in_process; }
    SutCapabilities capabilities() const override { return {true, true}; }
    IngestReply ingest(const AnnotatedRecord& record, SimTime now) override;
    IngestReply ingest_event(const EventReport& report, SimTime now) override;
    QueryReply query(const Query& q, const QueryOptions& options) override;

    const InsertAck& last_ack() const { return last_ack_; }
    std::int64_t event_reports() const { return event_reports_; }

private:
    TimeSeriesStore& store_;
    InsertAck last_ack_;
    std::int64_t event_reports_ = 0;
};

struct Endpoint {
    std::string host;
    int port = 0;
};

/// Parses "host:port".
Endpoint parse_endpoint(const std::string& text);

/// One blocking TCP connection carrying at most one request at a time.
class Connection {
public:
    Connection() = default;
    ~Connection();
    Connection(Connection&& other) noexcept;
    Connection& operator=(Connection&& other) noexcept;
    Connection(const Connection&) = delete;
    Connection& operator=(const Connection&) = delete;

    /// Connects with a timeout; throws SutUnreachable on failure.
    static Connection open(const Endpoint& ep, double timeout_s);
    static Connection adopt(int fd, double timeout_s);

    bool valid() const { return fd_ >= 0; }
    void close();

    /// Sends one frame and waits for the reply frame.
    wire::Frame request(const wire::Frame& frame);
    void send(const wire::Frame& frame);
    /// Returns nullopt on orderly shutdown by the peer.
    std::optional<wire::Frame> receive();

private:
    explicit Connection(int fd) : fd_(fd) {}
    int fd_ = -1;
};

class SutUnreachable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SutTimeout : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RemoteStats {
    std::int64_t ingest_failures = 0;
    std::int64_t query_failures = 0;
    std::int64_t protocol_errors = 0;
    std::int64_t timeouts = 0;
};

class RemoteSut final : public Sut {
public:
    /// Opens `pool_size` connections; throws SutUnreachable if none can be
    /// established.
    RemoteSut(Endpoint endpoint, int pool_size, double timeout_s, SutCapabilities caps);

    SutMode mode() const override { return SutMode::external; }
    SutCapabilities capabilities() const override { return caps_; }
    IngestReply ingest(const AnnotatedRecord& record, SimTime now) override;
    IngestReply ingest_event(const EventReport& report, SimTime now) override;
    QueryReply query(const Query& q, const QueryOptions& options) override;

    RemoteStats stats() const;

private:
    struct Lease;
    wire::Frame round_trip(const wire::Frame& frame);

    Endpoint endpoint_;
    double timeout_s_;
    SutCapabilities caps_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::vector<Connection> idle_;
    std::size_t pool_size_;
    mutable std::mutex stats_mu_;
    RemoteStats stats_;
};

/// Serves a reference store over the wire protocol, one thread per
/// connection. Store access is serialized.
class SutServer {
public:
    explicit SutServer(TimeSeriesStore& store, std::string bind_host = "127.0.0.1", int port = 0);
    ~SutServer();
    SutServer(const SutServer&) = delete;
    SutServer& operator=(const SutServer&) = delete;

    void start();
    void stop();
    int port() const { return port_; }

    /// Blocks until stop() is called from another thread.
    void wait();

    std::int64_t requests() const { return requests_.load(); }

private:
    void accept_loop();
    void serve(int fd);
    wire::Frame handle(const wire::Frame& request);

    TimeSeriesStore& store_;
    std::string host_;
    int port_;
    int listen_fd_ = -1;
    std::atomic<bool> running_{false};
    std::thread acceptor_;
    std::mutex workers_mu_;
    std::vector<std::thread> workers_;
    std::vector<int> client_fds_;
    std::mutex store_mu_;
    std::atomic<std::int64_t> requests_{0};
    std::int64_t event_reports_ = 0;
    std::mutex wait_mu_;
    std::condition_variable wait_cv_;
};

}  // namespace fogbench
