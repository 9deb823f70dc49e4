// Framing and message bodies of the external SUT protocol.
//
//   frame  := length:u32be opcode:u8 body
//   length := byte count of opcode + body
//   body   := UTF-8 JSON object
//
// See docs/wire-protocol.md for the body schemas.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fogbench/records.hpp"
#include "fogbench/store.hpp"

namespace fogbench::wire {

enum class Opcode : std::uint8_t {
    insert = 0x01,
    query = 0x02,
    result = 0x03,
    ack = 0x04,
    error = 0x05,
};

inline constexpr std::uint32_t kMaxFrameBytes = 256u << 20;

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Frame {
    Opcode opcode = Opcode::error;
    std::string body;
};

std::string encode(const Frame& frame);

/// Decodes one complete frame; throws ProtocolError on malformed input.
Frame decode(const std::string& bytes);

/// Parses the 4-byte length prefix.
std::uint32_t decode_length(const unsigned char header[4]);

nlohmann::json to_json(const AnnotatedRecord& r);
AnnotatedRecord annotated_from_json(const nlohmann::json& j);

nlohmann::json to_json(const EventReport& r);
EventReport event_report_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Query& q);
Query query_from_json(const nlohmann::json& j);

nlohmann::json to_json(const QueryResult& r);
QueryResult result_from_json(const nlohmann::json& j);

/// Parses a body, mapping JSON and schema errors to ProtocolError.
nlohmann::json parse_body(const std::string& body);

}  // namespace fogbench::wire
