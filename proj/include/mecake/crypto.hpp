#pragma once

#include <initializer_list>
#include <random>

#include "mecake/bytes.hpp"

namespace mecake::crypto {

// ---------------------------------------------------------------------------
// Hash
// ---------------------------------------------------------------------------

/// Digest primitive sitting behind h(). Swappable so tests can substitute a
/// toy hash; the process-wide default is SHA-256.
using HashBackend = Digest (*)(ByteView data);

Digest sha256(ByteView data);

HashBackend hash_backend();

/// Installs a new backend and returns the previous one.
HashBackend set_hash_backend(HashBackend backend);

/// Scoped backend swap for tests.
class HashBackendGuard {
 public:
  explicit HashBackendGuard(HashBackend backend)
      : previous_(set_hash_backend(backend)) {}
  ~HashBackendGuard() { set_hash_backend(previous_); }
  HashBackendGuard(const HashBackendGuard&) = delete;
  HashBackendGuard& operator=(const HashBackendGuard&) = delete;

 private:
  HashBackend previous_;
};

/// The scheme's sole hash primitive. Every part is prefixed with its 4-byte
/// big-endian length before concatenation, so field boundaries survive:
/// h({"AB", "C"}) != h({"A", "BC"}) even though the raw concatenations agree.
Digest h(std::initializer_list<ByteView> parts);

// ---------------------------------------------------------------------------
// Randomness
// ---------------------------------------------------------------------------

/// Deterministic random source. One seed reproduces one bit-identical
/// draw sequence; a scenario run owns exactly one of these.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  Nonce next_block();
  Bytes next_bytes(std::size_t count);

 private:
  std::mt19937_64 engine_;
};

/// Next 32 bytes of the generator stream.
Nonce fresh_nonce(SeededRng& rng);

// ---------------------------------------------------------------------------
// Fuzzy extractor
// ---------------------------------------------------------------------------

/// Enrollment output: the extracted secret sigma plus the public helper tau.
/// Exact-match extractor: rep() reproduces sigma only for the identical
/// sample.
struct FuzzyPair {
  Digest sigma;
  Block tau;
};

FuzzyPair fuzzy_gen(ByteView bio, SeededRng& rng);
Digest fuzzy_rep(ByteView bio, const Block& tau);

// ---------------------------------------------------------------------------
// Freshness
// ---------------------------------------------------------------------------

/// Accepts iff |ts - now| <= window_ms (inclusive on the boundary).
bool check_freshness(Timestamp ts, Timestamp now, std::uint64_t window_ms);

}  // namespace mecake::crypto
