#pragma once

#include <array>

#include "memtrade/bytes.hpp"
#include "memtrade/container.hpp"
#include "memtrade/result.hpp"
#include "memtrade/rng.hpp"

namespace memtrade::delivery {

// Off-platform artifact delivery: AES-256-GCM wrapper around a plaintext
// artifact container. The key travels directly from seller to buyer.
using Key = std::array<uint8_t, 32>;

Key make_key(Rng& rng);

/// Wraps plaintext into an encrypted delivery container (nonce || ciphertext || tag).
Bytes encrypt(const Key& key, ByteView plaintext, Rng& rng);

/// Authenticated decryption; tampered ciphertext fails.
Result<Bytes> decrypt(const Key& key, ByteView container);

}  // namespace memtrade::delivery
