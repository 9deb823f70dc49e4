#include "fogbench/wire.hpp"

namespace fogbench::wire {

using nlohmann::json;

namespace {

template <class T>
T field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ProtocolError(std::string("missing field '") + key + "'");
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ProtocolError(std::string("bad type for field '") + key + "'");
    }
}

bool valid_opcode(std::uint8_t op) { return op >= 0x01 && op <= 0x05; }

}  // namespace

std::string encode(const Frame& frame) {
    const std::uint64_t len = frame.body.size() + 1;
    if (len > kMaxFrameBytes) throw ProtocolError("frame too large");
    std::string out;
    out.reserve(len + 4);
    out.push_back(static_cast<char>((len >> 24) & 0xff));
    out.push_back(static_cast<char>((len >> 16) & 0xff));
    out.push_back(static_cast<char>((len >> 8) & 0xff));
    out.push_back(static_cast<char>(len & 0xff));
    out.push_back(static_cast<char>(frame.opcode));
    out += frame.body;
    return out;
}

std::uint32_t decode_length(const unsigned char h[4]) {
    return (static_cast<std::uint32_t>(h[0]) << 24) | (static_cast<std::uint32_t>(h[1]) << 16) |
           (static_cast<std::uint32_t>(h[2]) << 8) | static_cast<std::uint32_t>(h[3]);
}

Frame decode(const std::string& bytes) {
    if (bytes.size() < 5) throw ProtocolError("frame shorter than header");
    const auto* h = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::uint32_t len = decode_length(h);
    if (len == 0 || len > kMaxFrameBytes) throw ProtocolError("invalid frame length");
    if (bytes.size() != static_cast<std::size_t>(len) + 4) throw ProtocolError("frame length mismatch");
    if (!valid_opcode(h[4])) throw ProtocolError("unknown opcode");
    return Frame{static_cast<Opcode>(h[4]), bytes.substr(5)};
}

json parse_body(const std::string& body) {
    try {
        json j = json::parse(body);
        if (!j.is_object()) throw ProtocolError("body is not an object");
        return j;
    } catch (const json::parse_error& e) {
        throw ProtocolError(std::string("malformed body: ") + e.what());
    }
}

json to_json(const AnnotatedRecord& a) {
    const AggregateRecord& r = a.record;
    return {{"site_id", r.site_id},
            {"sensor_id", r.sensor_id},
            {"window_seq", r.window_seq},
            {"gen_time", r.gen_time},
            {"channel_means", r.channel_means},
            {"size_bits", r.size_bits},
            {"event_probability", a.event_probability},
            {"inference_time", a.inference_time}};
}

AnnotatedRecord annotated_from_json(const json& j) {
    AnnotatedRecord a;
    a.record.site_id = field<int>(j, "site_id");
    a.record.sensor_id = field<int>(j, "sensor_id");
    a.record.window_seq = field<std::int64_t>(j, "window_seq");
    a.record.gen_time = field<SimTime>(j, "gen_time");
    const auto means = field<std::vector<double>>(j, "channel_means");
    if (means.size() > kMaxChannels) throw ProtocolError("too many channel_means");
    std::copy(means.begin(), means.end(), a.record.channel_means.begin());
    a.record.size_bits = field<std::int64_t>(j, "size_bits");
    a.event_probability = field<double>(j, "event_probability");
    a.inference_time = field<SimTime>(j, "inference_time");
    return a;
}

json to_json(const EventReport& r) {
    return {{"report_id", r.report_id},       {"site_id", r.site_id},
            {"trigger_time", r.trigger_time}, {"exceed_count", r.exceed_count},
            {"dumps", r.dumps},               {"readings", r.readings},
            {"size_bits", r.size_bits}};
}

EventReport event_report_from_json(const json& j) {
    EventReport r;
    r.report_id = field<std::uint64_t>(j, "report_id");
    r.site_id = field<int>(j, "site_id");
    r.trigger_time = field<SimTime>(j, "trigger_time");
    r.exceed_count = field<std::int64_t>(j, "exceed_count");
    r.dumps = field<std::int64_t>(j, "dumps");
    r.readings = field<std::int64_t>(j, "readings");
    r.size_bits = field<std::int64_t>(j, "size_bits");
    return r;
}

json to_json(const Query& q) {
    json j = {{"query_id", q.query_id},
              {"client_id", q.client_id},
              {"kind", std::string(to_string(q.kind))},
              {"issue_time", q.issue_time},
              {"interval", nullptr},
              {"threshold", nullptr},
              {"lookback", q.lookback}};
    if (q.interval) j["interval"] = {{"start", q.interval->start}, {"end", q.interval->end}};
    if (q.threshold) j["threshold"] = *q.threshold;
    return j;
}

Query query_from_json(const json& j) {
    Query q;
    q.query_id = field<std::uint64_t>(j, "query_id");
    q.client_id = field<int>(j, "client_id");
    try {
        q.kind = query_kind_from_string(field<std::string>(j, "kind"));
    } catch (const std::invalid_argument& e) {
        throw ProtocolError(e.what());
    }
    q.issue_time = field<SimTime>(j, "issue_time");
    if (auto it = j.find("interval"); it != j.end() && !it->is_null()) {
        q.interval = Interval{field<SimTime>(*it, "start"), field<SimTime>(*it, "end")};
    }
    if (auto it = j.find("threshold"); it != j.end() && !it->is_null()) {
        q.threshold = field<double>(j, "threshold");
    }
    if (j.contains("lookback")) q.lookback = field<SimTime>(j, "lookback");
    if (q.kind != QueryKind::scan_filter && !q.interval) {
        throw ProtocolError("interval query without interval");
    }
    return q;
}

json to_json(const QueryResult& r) {
    json records = json::array();
    for (const auto& rec : r.records) {
        records.push_back({{"site_id", rec.key.site_id},
                           {"sensor_id", rec.key.sensor_id},
                           {"window_seq", rec.key.window_seq},
                           {"gen_time", rec.gen_time},
                           {"event_probability", rec.event_probability}});
    }
    json j = {{"query_id", r.query_id},
              {"records", std::move(records)},
              {"newest_gen_time", nullptr},
              {"completion_time", r.completion_time},
              {"served_by", r.served_by}};
    if (r.newest_gen_time) j["newest_gen_time"] = *r.newest_gen_time;
    if (!r.shares.empty()) {
        json shares = json::array();
        for (const auto& s : r.shares) {
            shares.push_back({{"instance", s.instance}, {"touched", s.touched}, {"returned", s.returned}});
        }
        j["shares"] = std::move(shares);
    }
    return j;
}

QueryResult result_from_json(const json& j) {
    QueryResult r;
    r.query_id = field<std::uint64_t>(j, "query_id");
    auto it = j.find("records");
    if (it == j.end() || !it->is_array()) throw ProtocolError("missing field 'records'");
    for (const auto& rec : *it) {
        ResultRecord out;
        out.key.site_id = field<int>(rec, "site_id");
        out.key.sensor_id = field<int>(rec, "sensor_id");
        out.key.window_seq = field<std::int64_t>(rec, "window_seq");
        out.gen_time = field<SimTime>(rec, "gen_time");
        out.event_probability = field<double>(rec, "event_probability");
        r.records.push_back(out);
    }
    r.count = static_cast<std::int64_t>(r.records.size());
    if (auto nt = j.find("newest_gen_time"); nt != j.end() && !nt->is_null()) {
        r.newest_gen_time = field<SimTime>(j, "newest_gen_time");
    }
    r.completion_time = field<SimTime>(j, "completion_time");
    r.served_by = field<std::vector<int>>(j, "served_by");
    if (auto sh = j.find("shares"); sh != j.end() && !sh->is_null()) {
        if (!sh->is_array()) throw ProtocolError("bad type for field 'shares'");
        for (const auto& s : *sh) {
            r.shares.push_back({field<int>(s, "instance"), field<std::int64_t>(s, "touched"),
                                field<std::int64_t>(s, "returned")});
        }
    }
    return r;
}

}  // namespace fogbench::wire
