#include "mecake/wire.hpp"

#include <stdexcept>

namespace mecake::wire {

namespace {

using crypto::Block;
using crypto::Timestamp;

std::string hex(const Block& b) {
  return crypto::to_hex(crypto::ByteView(b.data(), b.size()));
}

Block block_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string())
    throw std::invalid_argument(std::string("wire: missing field ") + key);
  return crypto::block_from_hex(j[key].get<std::string>());
}

Timestamp ts_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number_unsigned())
    throw std::invalid_argument(std::string("wire: missing timestamp ") + key);
  return Timestamp{j[key].get<std::uint64_t>()};
}

}  // namespace

nlohmann::json to_json(const MessageM1& m) {
  return {{"type", "m1"},
          {"rn1_masked", hex(m.rn1_masked)},
          {"b_i", hex(m.b_i)},
          {"d1", hex(m.d1)},
          {"d2", hex(m.d2)},
          {"ts_u", m.ts_u.millis}};
}

nlohmann::json to_json(const MessageM2& m) {
  return {{"type", "m2"},
          {"rn1_masked", hex(m.rn1_masked)},
          {"ts_rc", m.ts_rc.millis},
          {"tmid_masked", hex(m.tmid_masked)},
          {"d3", hex(m.d3)},
          {"d4", hex(m.d4)}};
}

nlohmann::json to_json(const MessageM3& m) {
  return {{"type", "m3"},
          {"ts_ms", m.ts_ms.millis},
          {"rn3_masked", hex(m.rn3_masked)},
          {"d5", hex(m.d5)},
          {"d6", hex(m.d6)}};
}

nlohmann::json to_json(const MessageM4& m) {
  return {{"type", "m4"},
          {"t4", m.t4.millis},
          {"rn3_masked", hex(m.rn3_masked)},
          {"d6", hex(m.d6)},
          {"d7", hex(m.d7)},
          {"d8", hex(m.d8)}};
}

nlohmann::json to_json(const WireMessage& m) {
  return std::visit([](const auto& msg) { return to_json(msg); }, m);
}

WireMessage from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    throw std::invalid_argument("wire: not a tagged message object");
  const std::string type = j["type"].get<std::string>();
  if (type == "m1") {
    MessageM1 m;
    m.rn1_masked = block_field(j, "rn1_masked");
    m.b_i = block_field(j, "b_i");
    m.d1 = block_field(j, "d1");
    m.d2 = block_field(j, "d2");
    m.ts_u = ts_field(j, "ts_u");
    return m;
  }
  if (type == "m2") {
    MessageM2 m;
    m.rn1_masked = block_field(j, "rn1_masked");
    m.ts_rc = ts_field(j, "ts_rc");
    m.tmid_masked = block_field(j, "tmid_masked");
    m.d3 = block_field(j, "d3");
    m.d4 = block_field(j, "d4");
    return m;
  }
  if (type == "m3") {
    MessageM3 m;
    m.ts_ms = ts_field(j, "ts_ms");
    m.rn3_masked = block_field(j, "rn3_masked");
    m.d5 = block_field(j, "d5");
    m.d6 = block_field(j, "d6");
    return m;
  }
  if (type == "m4") {
    MessageM4 m;
    m.t4 = ts_field(j, "t4");
    m.rn3_masked = block_field(j, "rn3_masked");
    m.d6 = block_field(j, "d6");
    m.d7 = block_field(j, "d7");
    m.d8 = block_field(j, "d8");
    return m;
  }
  throw std::invalid_argument("wire: unknown message type " + type);
}

std::string encode(const WireMessage& m) { return to_json(m).dump(); }

WireMessage decode(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("wire: bad json: ") + e.what());
  }
  return from_json(j);
}

}  // namespace mecake::wire
