#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string_view>

#include "memtrade/bytes.hpp"
#include "memtrade/canon.hpp"
#include "memtrade/rng.hpp"

namespace memtrade::crypto {

/// 32-byte SHA-256 output.
struct Digest {
  std::array<uint8_t, 32> v{};

  auto operator<=>(const Digest&) const = default;
  ByteView view() const { return ByteView(v.data(), v.size()); }
  std::string hex() const { return to_hex(view()); }
  static std::optional<Digest> from_bytes(ByteView b);
  static std::optional<Digest> from_hex_str(std::string_view hex);
};

/// Domain separation label; every hash and signature uses exactly one tag.
enum class DomainTag : uint8_t {
  Field,        // field commitments, attachment and container hashes
  Interaction,  // per-interaction digests
  Root,         // chained anchored roots
  Receipt,      // delivery receipts
  Cert,         // measurements, attestation, membership certificates, templates
  Anchor,       // anchor commitments
  Token,        // purchase tokens
  Inherit,      // inheritance records
  Hello,        // provider channel hello
  Confirm,      // resale-time artifact confirmations
  MemberList,   // signed member-list documents
  Bulletin,     // platform bulletin entries, countersignatures, arbiter decisions
  Account,      // balance-spending authorizations (fund locks)
  Review,       // buyer-signed feedback
};

std::string_view tag_label(DomainTag tag);

Digest sha256(ByteView data);

/// H(len(tag) || tag || payload); the one-byte length makes the prefix
/// unambiguous for any payload.
Digest digest(DomainTag tag, ByteView payload);

using Salt = std::array<uint8_t, 16>;

/// Salted commitment: digest(tag, salt || payload). Binding by collision
/// resistance, hiding by salt unpredictability.
Digest commit(DomainTag tag, const Salt& salt, ByteView payload);

struct PublicIdentity {
  std::array<uint8_t, 32> key{};

  auto operator<=>(const PublicIdentity&) const = default;
  ByteView view() const { return ByteView(key.data(), key.size()); }
  std::string hex() const { return to_hex(view()); }
  static std::optional<PublicIdentity> from_bytes(ByteView b);
};

struct Signature {
  std::array<uint8_t, 64> sig{};

  auto operator<=>(const Signature&) const = default;
  ByteView view() const { return ByteView(sig.data(), sig.size()); }
  static std::optional<Signature> from_bytes(ByteView b);
};

/// Ed25519 identity. Signatures are made over digest(tag, payload), so the
/// domain tag separates signing contexts the same way it separates hashes.
class KeyPair {
 public:
  KeyPair() = default;  // placeholder; assign before use

  static KeyPair generate();                       // OS entropy
  static KeyPair from_seed(const std::array<uint8_t, 32>& seed);
  static KeyPair from_rng(Rng& rng);               // insecure when rng is seeded

  Signature sign(DomainTag tag, ByteView payload) const;
  const PublicIdentity& public_id() const { return public_; }
  const std::array<uint8_t, 32>& seed() const { return seed_; }

 private:
  std::array<uint8_t, 32> seed_{};
  PublicIdentity public_;
};

/// Malformed keys or signatures verify false; never throws.
bool verify(const PublicIdentity& pub, DomainTag tag, ByteView payload, const Signature& sig);

}  // namespace memtrade::crypto
