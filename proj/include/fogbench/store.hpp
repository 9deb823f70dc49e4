// Reference cloud time-series store. Sites are partitioned round-robin over
// the instances; each instance keeps one gen_time-sorted log per site plus
// a running count of records above the configured scan threshold so that
// scans with that threshold are answered without a pass over the data.

#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "fogbench/records.hpp"

namespace fogbench {

struct StoredRecord {
    SimTime gen_time = 0;
    int sensor_id = 0;
    std::int64_t window_seq = 0;
    double event_probability = 0.0;
    SimTime insert_time = 0;
    std::int64_t size_bytes = 0;
};

struct InsertAck {
    int instance = 0;
    SimTime ack_time = 0;
    std::vector<RecordKey> evicted;
};

struct InstanceShare {
    int instance = 0;
    std::int64_t touched = 0;   // records read to answer the query
    std::int64_t returned = 0;
};

struct QueryOptions {
    bool materialize = false;         // fill QueryResult::records
    std::optional<SimTime> due_by;    // interval queries: count returned records with gen_time <= due_by
};

struct QueryResult {
    std::uint64_t query_id = 0;
    std::int64_t count = 0;
    std::optional<SimTime> newest_gen_time;
    SimTime completion_time = 0;
    std::vector<int> served_by;
    std::vector<InstanceShare> shares;
    std::vector<ResultRecord> records;  // sorted by (gen_time, site, sensor, seq) when materialized
    std::int64_t due_count = 0;
};

class TimeSeriesStore {
public:
    /// `disk_bytes_per_instance` is the effective retention bound of each
    /// instance; `indexed_threshold` is the scan threshold kept pre-counted.
    TimeSeriesStore(int n_instances, std::vector<int> site_ids, double disk_bytes_per_instance,
                    double indexed_threshold = 0.9);

    int instance_of(int site_id) const;
    int n_instances() const { return static_cast<int>(instances_.size()); }

    InsertAck insert(const AnnotatedRecord& record, SimTime now);

    QueryResult query(const Query& q, const QueryOptions& options = {}) const;

    /// Newest gen_time ingested so far (store-wide); absent while empty.
    std::optional<SimTime> watermark() const { return watermark_; }
    std::optional<SimTime> watermark(int instance) const;

    std::int64_t size() const;
    std::int64_t size(int instance) const;
    std::int64_t stored_bytes(int instance) const;
    std::int64_t evictions() const { return evictions_; }
    std::int64_t inserts() const { return inserts_; }

    /// Every stored record, sorted like a materialized result.
    std::vector<ResultRecord> contents() const;
    std::vector<ResultRecord> contents(int instance) const;

private:
    struct SiteLog {
        std::deque<StoredRecord> records;
        std::deque<std::int64_t> matches;  // running count of records above the indexed threshold
        std::int64_t base = 0;

        std::int64_t matches_before(std::size_t i) const { return i == 0 ? base : matches[i - 1]; }
    };
    struct Instance {
        std::map<int, SiteLog> sites;
        std::int64_t bytes = 0;
        std::optional<SimTime> watermark;
    };

    void evict_oldest(Instance& inst, int instance_index, std::vector<RecordKey>& out);
    void collect(const Instance& inst, const Query& q, const QueryOptions& options,
                 QueryResult& result, InstanceShare& share) const;

    std::vector<Instance> instances_;
    std::map<int, int> partition_;
    double disk_bytes_;
    double indexed_threshold_;
    std::optional<SimTime> watermark_;
    std::int64_t evictions_ = 0;
    std::int64_t inserts_ = 0;
};

/// Order-independent digest of a record set.
std::uint64_t digest(const std::vector<ResultRecord>& records);

}  // namespace fogbench
