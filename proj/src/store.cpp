#include "fogbench/store.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fogbench {

namespace {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

bool result_less(const ResultRecord& a, const ResultRecord& b) {
    if (a.gen_time != b.gen_time) return a.gen_time < b.gen_time;
    return a.key < b.key;
}

auto gen_lower(const std::deque<StoredRecord>& recs, SimTime t) {
    return std::lower_bound(recs.begin(), recs.end(), t,
                            [](const StoredRecord& r, SimTime v) { return r.gen_time < v; });
}

auto gen_upper(const std::deque<StoredRecord>& recs, SimTime t) {
    return std::upper_bound(recs.begin(), recs.end(), t,
                            [](SimTime v, const StoredRecord& r) { return v < r.gen_time; });
}

}  // namespace

std::uint64_t digest(const std::vector<ResultRecord>& records) {
    std::uint64_t d = 0;
    for (const auto& r : records) {
        std::uint64_t h = mix64(static_cast<std::uint64_t>(r.key.site_id));
        h = mix64(h ^ static_cast<std::uint64_t>(r.key.sensor_id));
        h = mix64(h ^ static_cast<std::uint64_t>(r.key.window_seq));
        d += h;
    }
    return d;
}

TimeSeriesStore::TimeSeriesStore(int n_instances, std::vector<int> site_ids,
                                 double disk_bytes_per_instance, double indexed_threshold)
    : disk_bytes_(disk_bytes_per_instance), indexed_threshold_(indexed_threshold) {
    if (n_instances < 1) throw std::invalid_argument("store: n_instances must be >= 1");
    if (disk_bytes_per_instance <= 0.0) throw std::invalid_argument("store: disk bound must be > 0");
    instances_.resize(static_cast<std::size_t>(n_instances));
    for (std::size_t i = 0; i < site_ids.size(); ++i) {
        const int inst = static_cast<int>(i % static_cast<std::size_t>(n_instances));
        if (!partition_.emplace(site_ids[i], inst).second) {
            throw std::invalid_argument("store: duplicate site id " + std::to_string(site_ids[i]));
        }
        instances_[static_cast<std::size_t>(inst)].sites.try_emplace(site_ids[i]);
    }
}

int TimeSeriesStore::instance_of(int site_id) const {
    auto it = partition_.find(site_id);
    if (it == partition_.end()) {
        throw std::out_of_range("store: no partition for site " + std::to_string(site_id));
    }
    return it->second;
}

InsertAck TimeSeriesStore::insert(const AnnotatedRecord& annotated, SimTime now) {
    const AggregateRecord& rec = annotated.record;
    InsertAck ack;
    ack.instance = instance_of(rec.site_id);
    ack.ack_time = now;
    Instance& inst = instances_[static_cast<std::size_t>(ack.instance)];
    SiteLog& log = inst.sites.at(rec.site_id);

    StoredRecord s;
    s.gen_time = rec.gen_time;
    s.sensor_id = rec.sensor_id;
    s.window_seq = rec.window_seq;
    s.event_probability = annotated.event_probability;
    s.insert_time = now;
    s.size_bytes = (rec.size_bits + 7) / 8;
    const std::int64_t match = s.event_probability > indexed_threshold_ ? 1 : 0;

    // Equal gen_times keep arrival order.
    auto pos = gen_upper(log.records, s.gen_time);
    const auto idx = static_cast<std::size_t>(pos - log.records.begin());
    const std::int64_t before = log.matches_before(idx);
    log.records.insert(pos, s);
    log.matches.insert(log.matches.begin() + static_cast<std::ptrdiff_t>(idx), before + match);
    if (match != 0) {
        for (std::size_t j = idx + 1; j < log.matches.size(); ++j) log.matches[j] += match;
    }

    inst.bytes += s.size_bytes;
    ++inserts_;
    if (!inst.watermark || *inst.watermark < s.gen_time) inst.watermark = s.gen_time;
    if (!watermark_ || *watermark_ < s.gen_time) watermark_ = s.gen_time;

    while (static_cast<double>(inst.bytes) > disk_bytes_) evict_oldest(inst, ack.instance, ack.evicted);
    return ack;
}

void TimeSeriesStore::evict_oldest(Instance& inst, int, std::vector<RecordKey>& out) {
    SiteLog* victim = nullptr;
    int victim_site = 0;
    for (auto& [site, log] : inst.sites) {
        if (log.records.empty()) continue;
        if (victim == nullptr || log.records.front().gen_time < victim->records.front().gen_time) {
            victim = &log;
            victim_site = site;
        }
    }
    if (victim == nullptr) return;
    const StoredRecord& r = victim->records.front();
    out.push_back(RecordKey{victim_site, r.sensor_id, r.window_seq});
    inst.bytes -= r.size_bytes;
    victim->base = victim->matches.front();
    victim->matches.pop_front();
    victim->records.pop_front();
    ++evictions_;
}

void TimeSeriesStore::collect(const Instance& inst, const Query& q, const QueryOptions& options,
                              QueryResult& result, InstanceShare& share) const {
    for (const auto& [site, log] : inst.sites) {
        const auto& recs = log.records;
        if (recs.empty()) continue;

        if (q.kind != QueryKind::scan_filter) {
            if (!q.interval) throw std::invalid_argument("store: interval query without interval");
            const auto lo = gen_lower(recs, q.interval->start);
            const auto hi = gen_lower(recs, q.interval->end);
            if (lo >= hi) continue;
            const std::int64_t n = hi - lo;
            share.touched += n;
            share.returned += n;
            const SimTime newest = (hi - 1)->gen_time;
            if (!result.newest_gen_time || *result.newest_gen_time < newest) {
                result.newest_gen_time = newest;
            }
            if (options.due_by) {
                const auto due_hi = std::min(hi, gen_upper(recs, *options.due_by));
                if (due_hi > lo) result.due_count += due_hi - lo;
            }
            if (options.materialize) {
                for (auto it = lo; it != hi; ++it) {
                    result.records.push_back(
                        {{site, it->sensor_id, it->window_seq}, it->gen_time, it->event_probability});
                }
            }
            continue;
        }

        const double theta = q.threshold.value_or(indexed_threshold_);
        auto lo = recs.begin();
        auto hi = recs.end();
        if (q.lookback > 0) {
            lo = gen_lower(recs, q.issue_time - q.lookback);
            hi = gen_lower(recs, q.issue_time);
        }
        if (lo >= hi) continue;
        share.touched += hi - lo;
        const auto i0 = static_cast<std::size_t>(lo - recs.begin());
        const auto i1 = static_cast<std::size_t>(hi - recs.begin());

        if (theta == indexed_threshold_ && !options.materialize) {
            const std::int64_t end_count = log.matches[i1 - 1];
            const std::int64_t n = end_count - log.matches_before(i0);
            if (n == 0) continue;
            share.returned += n;
            // First position whose running count reaches end_count is the newest match.
            const auto pos = std::lower_bound(log.matches.begin() + static_cast<std::ptrdiff_t>(i0),
                                              log.matches.begin() + static_cast<std::ptrdiff_t>(i1),
                                              end_count);
            const SimTime newest = recs[static_cast<std::size_t>(pos - log.matches.begin())].gen_time;
            if (!result.newest_gen_time || *result.newest_gen_time < newest) {
                result.newest_gen_time = newest;
            }
            continue;
        }
        for (std::size_t i = i0; i < i1; ++i) {
            const StoredRecord& r = recs[i];
            if (!(r.event_probability > theta)) continue;
            ++share.returned;
            if (!result.newest_gen_time || *result.newest_gen_time < r.gen_time) {
                result.newest_gen_time = r.gen_time;
            }
            if (options.materialize) {
                result.records.push_back({{site, r.sensor_id, r.window_seq}, r.gen_time,
                                          r.event_probability});
            }
        }
    }
}

QueryResult TimeSeriesStore::query(const Query& q, const QueryOptions& options) const {
    QueryResult result;
    result.query_id = q.query_id;
    result.completion_time = q.issue_time;
    for (std::size_t i = 0; i < instances_.size(); ++i) {
        if (instances_[i].sites.empty()) continue;
        InstanceShare share;
        share.instance = static_cast<int>(i);
        collect(instances_[i], q, options, result, share);
        result.count += share.returned;
        result.served_by.push_back(share.instance);
        result.shares.push_back(share);
    }
    if (options.materialize) std::sort(result.records.begin(), result.records.end(), result_less);
    return result;
}

std::optional<SimTime> TimeSeriesStore::watermark(int instance) const {
    return instances_.at(static_cast<std::size_t>(instance)).watermark;
}

std::int64_t TimeSeriesStore::size() const {
    std::int64_t n = 0;
    for (int i = 0; i < n_instances(); ++i) n += size(i);
    return n;
}

std::int64_t TimeSeriesStore::size(int instance) const {
    std::int64_t n = 0;
    for (const auto& [_, log] : instances_.at(static_cast<std::size_t>(instance)).sites) {
        n += static_cast<std::int64_t>(log.records.size());
    }
    return n;
}

std::int64_t TimeSeriesStore::stored_bytes(int instance) const {
    return instances_.at(static_cast<std::size_t>(instance)).bytes;
}

std::vector<ResultRecord> TimeSeriesStore::contents(int instance) const {
    std::vector<ResultRecord> out;
    for (const auto& [site, log] : instances_.at(static_cast<std::size_t>(instance)).sites) {
        for (const auto& r : log.records) {
            out.push_back({{site, r.sensor_id, r.window_seq}, r.gen_time, r.event_probability});
        }
    }
    std::sort(out.begin(), out.end(), result_less);
    return out;
}

std::vector<ResultRecord> TimeSeriesStore::contents() const {
    std::vector<ResultRecord> out;
    for (int i = 0; i < n_instances(); ++i) {
        auto part = contents(i);
        out.insert(out.end(), part.begin(), part.end());
    }
    std::sort(out.begin(), out.end(), result_less);
    return out;
}

}  // namespace fogbench
