#pragma once

#include <string>

#include <json.hpp>

#include "mecake/protocol.hpp"

// JSON wire encoding for the four protocol messages. Byte fields are
// lowercase hex strings, timestamps are integer milliseconds, and every
// object carries a "type" tag ("m1".."m4"). nlohmann::json keeps object
// keys sorted, so dumping the same message twice yields identical text —
// transcripts diff cleanly across runs.
namespace mecake::wire {

using protocol::MessageM1;
using protocol::MessageM2;
using protocol::MessageM3;
using protocol::MessageM4;
using protocol::WireMessage;

nlohmann::json to_json(const MessageM1& m);
nlohmann::json to_json(const MessageM2& m);
nlohmann::json to_json(const MessageM3& m);
nlohmann::json to_json(const MessageM4& m);
nlohmann::json to_json(const WireMessage& m);

/// Parses a tagged message object. Throws std::invalid_argument on a
/// missing/unknown tag or malformed field.
WireMessage from_json(const nlohmann::json& j);

std::string encode(const WireMessage& m);
WireMessage decode(const std::string& text);

}  // namespace mecake::wire
