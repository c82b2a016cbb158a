#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "memtrade/canon.hpp"
#include "memtrade/crypto.hpp"
#include "memtrade/rng.hpp"
#include "support/sha256_ref.hpp"

#include <map>

using namespace memtrade;
using canon::Value;
using crypto::DomainTag;

namespace {

// Random value tree generator for the injectivity property.
Value random_tree(Rng& rng, int depth) {
  uint64_t pick = depth >= 3 ? rng.below(2) : rng.below(4);
  switch (pick) {
    case 0:
      return Value::bytes(rng.bytes(rng.below(24)));
    case 1:
      return Value::u64(rng.next_u64() >> rng.below(60));
    default: {
      std::vector<Value> items;
      uint64_t n = rng.below(4);
      for (uint64_t i = 0; i < n; ++i) items.push_back(random_tree(rng, depth + 1));
      return pick == 2 ? Value::list(std::move(items)) : Value::record(std::move(items));
    }
  }
}

std::vector<uint8_t> tag_prefixed(DomainTag tag, const Bytes& payload) {
  std::string_view label = crypto::tag_label(tag);
  std::vector<uint8_t> preimage;
  preimage.push_back(static_cast<uint8_t>(label.size()));
  preimage.insert(preimage.end(), label.begin(), label.end());
  preimage.insert(preimage.end(), payload.begin(), payload.end());
  return preimage;
}

}  // namespace

TEST_CASE("empty byte-string encodes to tag plus zero length prefix") {
  Bytes enc = Value::bytes("").encode();
  REQUIRE(enc.size() == 9);
  CHECK(enc[0] == 0x01);
  for (size_t i = 1; i < 9; ++i) CHECK(enc[i] == 0x00);
}

TEST_CASE("integer zero and eight zero bytes encode differently") {
  Bytes as_int = Value::u64(0).encode();
  Bytes as_bytes = Value::bytes(Bytes(8, 0)).encode();
  CHECK(as_int != as_bytes);
  CHECK(as_int[0] == 0x02);
  CHECK(as_bytes[0] == 0x01);
}

TEST_CASE("record encoding is deterministic") {
  auto make = [] {
    return Value::record({Value::bytes("x"), Value::bytes("y")}).encode();
  };
  CHECK(make() == make());
}

TEST_CASE("record and list with identical children encode differently") {
  std::vector<Value> items1{Value::u64(1), Value::bytes("a")};
  std::vector<Value> items2{Value::u64(1), Value::bytes("a")};
  CHECK(Value::record(std::move(items1)).encode() != Value::list(std::move(items2)).encode());
}

TEST_CASE("decode inverts encode and rejects trailing or truncated input") {
  Rng rng = Rng::seeded(11);
  for (int i = 0; i < 200; ++i) {
    Value tree = random_tree(rng, 0);
    Bytes enc = tree.encode();
    auto decoded = Value::decode(ByteView(enc));
    REQUIRE(decoded.has_value());
    CHECK(*decoded == tree);

    Bytes trailing = enc;
    trailing.push_back(0x00);
    CHECK(!Value::decode(ByteView(trailing)).has_value());
    if (enc.size() > 1) {
      Bytes truncated(enc.begin(), enc.end() - 1);
      CHECK(!Value::decode(ByteView(truncated)).has_value());
    }
  }
}

TEST_CASE("decode caps allocations from hostile length prefixes") {
  // Claims a 2^60-byte string with a 3-byte body.
  Bytes hostile{0x01, 0x10, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x61, 0x62, 0x63};
  CHECK(!Value::decode(ByteView(hostile)).has_value());
}

TEST_CASE("10k random value trees: equal encodings imply equal trees") {
  Rng rng = Rng::seeded(42);
  std::map<Bytes, Value> seen;
  for (int i = 0; i < 10000; ++i) {
    Value tree = random_tree(rng, 0);
    Bytes enc = tree.encode();
    auto [it, inserted] = seen.emplace(std::move(enc), tree);
    if (!inserted) {
      CHECK(it->second == tree);
    }
  }
}

TEST_CASE("digest matches an independent SHA-256 over the tag-prefixed bytes") {
  crypto::Digest got = crypto::digest(DomainTag::Field, ByteView{});
  auto want = testsupport::sha256_ref(tag_prefixed(DomainTag::Field, {}));
  CHECK(got.v == want);

  Rng rng = Rng::seeded(3);
  for (int i = 0; i < 50; ++i) {
    Bytes payload = rng.bytes(rng.below(200));
    crypto::Digest d = crypto::digest(DomainTag::Receipt, ByteView(payload));
    CHECK(d.v == testsupport::sha256_ref(tag_prefixed(DomainTag::Receipt, payload)));
  }
}

TEST_CASE("distinct tags give distinct digests over random payloads") {
  Rng rng = Rng::seeded(17);
  for (int i = 0; i < 1000; ++i) {
    Bytes payload = rng.bytes(1 + rng.below(64));
    CHECK(crypto::digest(DomainTag::Field, ByteView(payload)) !=
          crypto::digest(DomainTag::Interaction, ByteView(payload)));
  }
}

TEST_CASE("equal payloads and tags give equal digests") {
  Bytes payload = to_bytes("same input");
  CHECK(crypto::digest(DomainTag::Root, ByteView(payload)) ==
        crypto::digest(DomainTag::Root, ByteView(payload)));
}

TEST_CASE("commitments: salts hide, openings verify, tampering breaks") {
  Rng rng = Rng::seeded(7);
  Bytes payload = to_bytes("committed value");
  crypto::Salt salt_a = rng.bytes16();
  crypto::Salt salt_b = rng.bytes16();
  REQUIRE(salt_a != salt_b);

  CHECK(crypto::commit(DomainTag::Field, salt_a, ByteView(payload)) !=
        crypto::commit(DomainTag::Field, salt_b, ByteView(payload)));

  // Opening: the verifier recomputes the identical digest.
  CHECK(crypto::commit(DomainTag::Field, salt_a, ByteView(payload)) ==
        crypto::commit(DomainTag::Field, salt_a, ByteView(payload)));

  // commit = digest(tag, salt || payload), cross-checked via the oracle.
  Bytes salted(salt_a.begin(), salt_a.end());
  append_bytes(salted, ByteView(payload));
  CHECK(crypto::commit(DomainTag::Field, salt_a, ByteView(payload)).v ==
        testsupport::sha256_ref(tag_prefixed(DomainTag::Field, salted)));

  for (int trial = 0; trial < 100; ++trial) {
    Bytes tampered = rng.bytes(1 + rng.below(64));
    crypto::Salt salt = rng.bytes16();
    crypto::Digest original = crypto::commit(DomainTag::Field, salt, ByteView(tampered));
    size_t pos = rng.below(tampered.size());
    tampered[pos] ^= uint8_t(1 + rng.below(255));
    CHECK(crypto::commit(DomainTag::Field, salt, ByteView(tampered)) != original);
  }
}

TEST_CASE("sign/verify round trip with domain separation") {
  Rng rng = Rng::seeded(23);
  crypto::KeyPair key = crypto::KeyPair::from_rng(rng);
  Bytes payload = to_bytes("message to certify");
  crypto::Signature sig = key.sign(DomainTag::Receipt, ByteView(payload));

  CHECK(crypto::verify(key.public_id(), DomainTag::Receipt, ByteView(payload), sig));
  CHECK(!crypto::verify(key.public_id(), DomainTag::Anchor, ByteView(payload), sig));

  crypto::KeyPair other = crypto::KeyPair::from_rng(rng);
  CHECK(!crypto::verify(other.public_id(), DomainTag::Receipt, ByteView(payload), sig));
}

TEST_CASE("malformed signatures and keys verify false without crashing") {
  Rng rng = Rng::seeded(29);
  crypto::KeyPair key = crypto::KeyPair::from_rng(rng);
  Bytes payload = to_bytes("fuzzed");
  crypto::Signature sig = key.sign(DomainTag::Token, ByteView(payload));

  for (int trial = 0; trial < 200; ++trial) {
    crypto::Signature mangled = sig;
    size_t pos = rng.below(mangled.sig.size());
    mangled.sig[pos] ^= uint8_t(1 + rng.below(255));
    CHECK(!crypto::verify(key.public_id(), DomainTag::Token, ByteView(payload), mangled));
  }
  for (int trial = 0; trial < 50; ++trial) {
    crypto::PublicIdentity junk;
    rng.fill(junk.key.data(), junk.key.size());
    crypto::verify(junk, DomainTag::Token, ByteView(payload), sig);  // must not throw
  }
  crypto::Signature zero{};
  CHECK(!crypto::verify(key.public_id(), DomainTag::Token, ByteView(payload), zero));
}

TEST_CASE("key generation draws from the OS entropy source") {
  crypto::KeyPair a = crypto::KeyPair::generate();
  crypto::KeyPair b = crypto::KeyPair::generate();
  CHECK(a.public_id() != b.public_id());
}
