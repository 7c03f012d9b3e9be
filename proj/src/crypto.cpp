#include "mecake/crypto.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <stdexcept>

namespace mecake::crypto {

Digest sha256(ByteView data) {
  static const Byte kEmpty = 0;
  Digest out{};
  unsigned int out_len = 0;
  const Byte* ptr = data.empty() ? &kEmpty : data.data();
  if (EVP_Digest(ptr, data.size(), out.data(), &out_len, EVP_sha256(),
                 nullptr) != 1 ||
      out_len != out.size())
    throw std::runtime_error("sha256: EVP_Digest failed");
  return out;
}

namespace {
std::atomic<HashBackend> g_hash_backend{&sha256};
}

HashBackend hash_backend() { return g_hash_backend.load(); }

HashBackend set_hash_backend(HashBackend backend) {
  if (backend == nullptr)
    throw std::invalid_argument("set_hash_backend: null backend");
  return g_hash_backend.exchange(backend);
}

Digest h(std::initializer_list<ByteView> parts) {
  if (parts.size() == 0)
    throw std::invalid_argument("h: at least one part required");
  std::size_t total = 0;
  for (const ByteView& part : parts) total += 4 + part.size();
  Bytes buffer;
  buffer.reserve(total);
  for (const ByteView& part : parts) {
    if (part.size() > 0xffffffffull)
      throw std::invalid_argument("h: part exceeds 4-byte length prefix");
    const auto n = static_cast<std::uint32_t>(part.size());
    buffer.push_back(static_cast<Byte>(n >> 24));
    buffer.push_back(static_cast<Byte>(n >> 16));
    buffer.push_back(static_cast<Byte>(n >> 8));
    buffer.push_back(static_cast<Byte>(n));
    buffer.insert(buffer.end(), part.begin(), part.end());
  }
  return hash_backend()(ByteView{buffer});
}

Nonce SeededRng::next_block() {
  Nonce out{};
  for (std::size_t w = 0; w < kBlockSize / 8; ++w) {
    std::uint64_t v = engine_();
    for (int i = 7; i >= 0; --i) {
      out[w * 8 + static_cast<std::size_t>(i)] = static_cast<Byte>(v & 0xff);
      v >>= 8;
    }
  }
  return out;
}

Bytes SeededRng::next_bytes(std::size_t count) {
  Bytes out;
  out.reserve(count + 8);
  while (out.size() < count) {
    std::uint64_t v = engine_();
    for (int i = 0; i < 8; ++i) {
      out.push_back(static_cast<Byte>(v >> 56));
      v <<= 8;
    }
  }
  out.resize(count);
  return out;
}

Nonce fresh_nonce(SeededRng& rng) { return rng.next_block(); }

FuzzyPair fuzzy_gen(ByteView bio, SeededRng& rng) {
  if (bio.empty()) throw std::invalid_argument("fuzzy_gen: empty biometric");
  FuzzyPair pair;
  pair.tau = rng.next_block();
  pair.sigma = h({bio, pair.tau});
  return pair;
}

Digest fuzzy_rep(ByteView bio, const Block& tau) {
  if (bio.empty()) throw std::invalid_argument("fuzzy_rep: empty biometric");
  return h({bio, tau});
}

bool check_freshness(Timestamp ts, Timestamp now, std::uint64_t window_ms) {
  const std::uint64_t diff =
      ts.millis > now.millis ? ts.millis - now.millis : now.millis - ts.millis;
  return diff <= window_ms;
}

}  // namespace mecake::crypto
