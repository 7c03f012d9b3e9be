#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mecake::crypto {

using Byte = std::uint8_t;
using Bytes = std::vector<Byte>;
using ByteView = std::span<const Byte>;

// Single word size of the scheme: identities, nonces, digests and every
// masked channel value are 32 bytes, so XOR between any two of them is
// always well defined.
inline constexpr std::size_t kBlockSize = 32;

using Block = std::array<Byte, kBlockSize>;
using Digest = Block;  // output of h()
using Nonce = Block;   // output of the seeded generator

/// Milliseconds on the simulated clock.
struct Timestamp {
  std::uint64_t millis = 0;
  auto operator<=>(const Timestamp&) const = default;
};

/// Hash/wire encoding of a timestamp: 8 bytes, big endian.
std::array<Byte, 8> encode(Timestamp ts);

ByteView as_bytes(std::string_view s);

/// Bytewise exclusive-or. Self-inverse: xor_mask(xor_mask(a, b), b) == a.
Block xor_mask(const Block& a, const Block& b);

bool is_zero(const Block& b);

/// Fixes an identity or similar short string at the 32-byte word size by
/// zero-padding on the right. Inputs longer than 32 bytes are rejected.
Block pad_to_block(ByteView data);

std::string to_hex(ByteView data);
Bytes bytes_from_hex(std::string_view hex);
Block block_from_hex(std::string_view hex);

}  // namespace mecake::crypto
