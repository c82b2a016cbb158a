#pragma once

#include <array>
#include <random>

#include "memtrade/bytes.hpp"

namespace memtrade {

/// Randomness source. The seeded variant is reproducible and exists for
/// tests and scripted scenarios only; it is NOT cryptographically secure.
/// The system variant draws from the OS entropy source.
class Rng {
 public:
  static Rng seeded(uint64_t seed);
  static Rng system();

  void fill(uint8_t* out, size_t n);
  Bytes bytes(size_t n);
  std::array<uint8_t, 16> bytes16();
  std::array<uint8_t, 32> bytes32();
  uint64_t next_u64();
  // Uniform in [0, bound); bound must be > 0.
  uint64_t below(uint64_t bound);

  bool deterministic() const { return deterministic_; }

 private:
  explicit Rng(bool deterministic, uint64_t seed);
  bool deterministic_;
  std::mt19937_64 gen_;
};

}  // namespace memtrade
