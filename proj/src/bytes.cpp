#include "mecake/bytes.hpp"

#include <algorithm>
#include <stdexcept>

namespace mecake::crypto {

std::array<Byte, 8> encode(Timestamp ts) {
  std::array<Byte, 8> out{};
  std::uint64_t v = ts.millis;
  for (int i = 7; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = static_cast<Byte>(v & 0xff);
    v >>= 8;
  }
  return out;
}

ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const Byte*>(s.data()), s.size()};
}

Block xor_mask(const Block& a, const Block& b) {
  Block out;
  for (std::size_t i = 0; i < kBlockSize; ++i) out[i] = a[i] ^ b[i];
  return out;
}

bool is_zero(const Block& b) {
  return std::all_of(b.begin(), b.end(), [](Byte x) { return x == 0; });
}

Block pad_to_block(ByteView data) {
  if (data.size() > kBlockSize)
    throw std::invalid_argument("pad_to_block: input longer than 32 bytes");
  Block out{};
  std::copy(data.begin(), data.end(), out.begin());
  return out;
}

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string to_hex(ByteView data) {
  std::string out;
  out.reserve(data.size() * 2);
  for (Byte b : data) {
    out.push_back(kHexDigits[b >> 4]);
    out.push_back(kHexDigits[b & 0x0f]);
  }
  return out;
}

Bytes bytes_from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0)
    throw std::invalid_argument("bytes_from_hex: odd-length input");
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    const int hi = hex_nibble(hex[i]);
    const int lo = hex_nibble(hex[i + 1]);
    if (hi < 0 || lo < 0)
      throw std::invalid_argument("bytes_from_hex: non-hex character");
    out.push_back(static_cast<Byte>((hi << 4) | lo));
  }
  return out;
}

Block block_from_hex(std::string_view hex) {
  if (hex.size() != kBlockSize * 2)
    throw std::invalid_argument("block_from_hex: expected 64 hex characters");
  const Bytes raw = bytes_from_hex(hex);
  Block out;
  std::copy(raw.begin(), raw.end(), out.begin());
  return out;
}

}  // namespace mecake::crypto
