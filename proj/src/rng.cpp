#include "memtrade/rng.hpp"

#include <openssl/rand.h>

#include <stdexcept>

namespace memtrade {

Rng::Rng(bool deterministic, uint64_t seed) : deterministic_(deterministic), gen_(seed) {}

Rng Rng::seeded(uint64_t seed) {
  return Rng(true, seed);
}

Rng Rng::system() {
  return Rng(false, 0);
}

void Rng::fill(uint8_t* out, size_t n) {
  if (deterministic_) {
    for (size_t i = 0; i < n; ++i) {
      out[i] = static_cast<uint8_t>(gen_() & 0xFF);
    }
    return;
  }
  if (RAND_bytes(out, static_cast<int>(n)) != 1) {
    throw std::runtime_error("OS entropy source unavailable");
  }
}

Bytes Rng::bytes(size_t n) {
  Bytes out(n);
  if (n > 0) fill(out.data(), n);
  return out;
}

std::array<uint8_t, 16> Rng::bytes16() {
  std::array<uint8_t, 16> out{};
  fill(out.data(), out.size());
  return out;
}

std::array<uint8_t, 32> Rng::bytes32() {
  std::array<uint8_t, 32> out{};
  fill(out.data(), out.size());
  return out;
}

uint64_t Rng::next_u64() {
  if (deterministic_) return gen_();
  uint8_t buf[8];
  fill(buf, sizeof(buf));
  uint64_t v = 0;
  for (uint8_t b : buf) v = (v << 8) | b;
  return v;
}

uint64_t Rng::below(uint64_t bound) {
  // Rejection sampling keeps the distribution uniform.
  uint64_t limit = bound * ((~uint64_t{0}) / bound);
  uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % bound;
}

}  // namespace memtrade
