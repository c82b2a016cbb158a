#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "memtrade/ledger.hpp"
#include "support/sha256_ref.hpp"

using namespace memtrade;
using namespace memtrade::ledger;
using crypto::Digest;
using crypto::DomainTag;

namespace {

GenesisInputs test_genesis(uint8_t tint = 1) {
  GenesisInputs gi;
  gi.gang_config_hash.v.fill(tint);
  gi.agent.key.fill(tint + 1);
  return gi;
}

InteractionRecord sample_record(Log& log, Rng& rng, uint64_t ts, const std::string& label) {
  return log.make_record(to_bytes("prompt " + label), to_bytes("response " + label), "mock-model",
                         3, 5, ts, rng);
}

Log build_log(size_t n, uint64_t seed = 5) {
  Rng rng = Rng::seeded(seed);
  Log log(test_genesis());
  for (size_t i = 0; i < n; ++i) {
    auto appended = log.append(sample_record(log, rng, 1000 + i, std::to_string(i)));
    REQUIRE(appended.ok());
  }
  return log;
}

// Independent chain oracle: recomputes the anchored root from digests alone
// using hand-rolled canonical framing and the reference SHA-256.
std::vector<uint8_t> manual_bytes_leaf(const std::array<uint8_t, 32>& b) {
  std::vector<uint8_t> out{0x01, 0, 0, 0, 0, 0, 0, 0, 32};
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

std::array<uint8_t, 32> manual_chain_step(const std::array<uint8_t, 32>& prev,
                                          const std::array<uint8_t, 32>& idigest) {
  std::vector<uint8_t> payload{0x04, 0, 0, 0, 0, 0, 0, 0, 2};
  auto a = manual_bytes_leaf(prev);
  auto b = manual_bytes_leaf(idigest);
  payload.insert(payload.end(), a.begin(), a.end());
  payload.insert(payload.end(), b.begin(), b.end());
  std::vector<uint8_t> preimage{4, 'R', 'O', 'O', 'T'};
  preimage.insert(preimage.end(), payload.begin(), payload.end());
  return testsupport::sha256_ref(preimage);
}

}  // namespace

TEST_CASE("genesis binds gang config and agent identity") {
  GenesisInputs a = test_genesis(1);
  GenesisInputs b = test_genesis(9);
  CHECK(genesis(a).root != genesis(b).root);
  CHECK(genesis(a) == genesis(a));
  CHECK(genesis(a).length == 0);
}

TEST_CASE("genesis root recomputes from its documented preimage") {
  GenesisInputs gi = test_genesis();
  std::vector<uint8_t> payload{0x04, 0, 0, 0, 0, 0, 0, 0, 2};
  auto a = manual_bytes_leaf(gi.gang_config_hash.v);
  auto b = manual_bytes_leaf(gi.agent.key);
  payload.insert(payload.end(), a.begin(), a.end());
  payload.insert(payload.end(), b.begin(), b.end());
  std::vector<uint8_t> preimage{4, 'R', 'O', 'O', 'T'};
  preimage.insert(preimage.end(), payload.begin(), payload.end());
  CHECK(genesis(gi).root.v == testsupport::sha256_ref(preimage));
}

TEST_CASE("append advances the chained root from genesis") {
  Rng rng = Rng::seeded(2);
  Log log(test_genesis());
  Digest genesis_root = log.root().root;
  auto appended = log.append(sample_record(log, rng, 1000, "first"));
  REQUIRE(appended.ok());
  CHECK(appended.value().length == 1);
  CHECK(appended.value().root == chain_next(genesis_root, log.interaction(0).digest));
}

TEST_CASE("append rejects sequence gaps and timestamp regressions") {
  Rng rng = Rng::seeded(3);
  Log log(test_genesis());
  REQUIRE(log.append(sample_record(log, rng, 1000, "a")).ok());

  InteractionRecord gap = log.make_record(to_bytes("p"), to_bytes("r"), "m", 1, 1, 2000, rng);
  gap.seq_no = log.size() + 1;
  CHECK(!log.append(gap).ok());

  InteractionRecord regress = log.make_record(to_bytes("p"), to_bytes("r"), "m", 1, 1, 999, rng);
  CHECK(!log.append(regress).ok());
  CHECK(log.size() == 1);
}

TEST_CASE("chain-replay oracle: stored digests alone reproduce the root") {
  Log log = build_log(100);
  std::array<uint8_t, 32> running = log.root_at(0).value().root.v;
  for (uint64_t i = 0; i < log.size(); ++i) {
    running = manual_chain_step(running, log.interaction(i).digest.v);
  }
  CHECK(running == log.root().root.v);
}

TEST_CASE("prefix property: the digest list for root(j) extends the list for root(i)") {
  Log log = build_log(20);
  for (uint64_t i = 0; i <= log.size(); i += 5) {
    Digest running = log.root_at(0).value().root;
    for (uint64_t k = 0; k < i; ++k) running = chain_next(running, log.interaction(k).digest);
    CHECK(running == log.root_at(i).value().root);
  }
}

TEST_CASE("full disclosure artifact lets the verifier rebuild every commitment") {
  Log log = build_log(6);
  auto bundle = log.build_artifact({0, 1, 2, 3, 4, 5}, open_all());
  REQUIRE(bundle.ok());
  VerificationReport report = verify_artifact(bundle.value(), log.root(), log.genesis_inputs());
  CHECK(report.ok());

  for (size_t s = 0; s < bundle.value().artifact.interactions.size(); ++s) {
    const DisclosedInteraction& di = bundle.value().artifact.interactions[s];
    for (size_t f = 0; f < kFieldCount; ++f) {
      REQUIRE(di.fields[f].opened);
      Digest recomputed =
          crypto::commit(DomainTag::Field, di.fields[f].salt, ByteView(di.fields[f].value));
      CHECK(recomputed == bundle.value().proof.selected_field_digests[s][f]);
    }
  }
}

TEST_CASE("non-contiguous selection with hidden responses verifies") {
  Log log = build_log(10);
  DisclosurePolicy policy = open_all();
  policy[kResponse] = FieldDisclosure::Hide;
  auto bundle = log.build_artifact({3, 7}, policy);
  REQUIRE(bundle.ok());
  CHECK(verify_artifact(bundle.value(), log.root(), log.genesis_inputs()).ok());
  CHECK(!bundle.value().artifact.interactions[0].fields[kResponse].opened);
}

TEST_CASE("empty selection proves only the root") {
  Log log = build_log(4);
  auto bundle = log.build_artifact({}, open_all());
  REQUIRE(bundle.ok());
  CHECK(verify_artifact(bundle.value(), log.root(), log.genesis_inputs()).ok());
  CHECK(bundle.value().artifact.interactions.empty());
}

TEST_CASE("build_artifact rejects out-of-range and duplicate selections") {
  Log log = build_log(4);
  CHECK(!log.build_artifact({9}, open_all()).ok());
  CHECK(!log.build_artifact({1, 1}, open_all()).ok());
  std::vector<DisclosurePolicy> short_policies(1, open_all());
  CHECK(!log.build_artifact({0, 1}, short_policies).ok());
}

TEST_CASE("artifact against a different gang's genesis fails the root check") {
  Log log = build_log(5);
  auto bundle = log.build_artifact({1}, open_all());
  REQUIRE(bundle.ok());
  Log other(test_genesis(7));
  VerificationReport report =
      verify_artifact(bundle.value(), other.root(), other.genesis_inputs());
  CHECK(!report.ok());
}

TEST_CASE("serialized bundles are byte-stable and round-trip") {
  Log log = build_log(8);
  DisclosurePolicy policy = open_all();
  policy[kPrompt] = FieldDisclosure::Hide;
  auto bundle = log.build_artifact({2, 5}, policy, to_bytes("extra notes"));
  REQUIRE(bundle.ok());

  Bytes container1 = serialize_bundle(bundle.value());
  Bytes container2 = serialize_bundle(bundle.value());
  CHECK(container1 == container2);
  CHECK(container1[0] == 'M');
  CHECK(container1[4] == 1);

  auto parsed = parse_bundle(ByteView(container1));
  REQUIRE(parsed.has_value());
  CHECK(serialize_bundle(*parsed) == container1);
  CHECK(verify_artifact_bytes(ByteView(container1), log.root(), log.genesis_inputs()).ok());

  // Receipt-side hash is the digest of the exact container bytes.
  std::vector<uint8_t> preimage{5, 'F', 'I', 'E', 'L', 'D'};
  preimage.insert(preimage.end(), container1.begin(), container1.end());
  CHECK(artifact_hash(ByteView(container1)).v == testsupport::sha256_ref(preimage));
}

TEST_CASE("targeted single-byte tampering is rejected") {
  Log log = build_log(12, 31);
  DisclosurePolicy policy = open_all();
  policy[kResponse] = FieldDisclosure::Hide;
  auto bundle = log.build_artifact({0, 4, 9}, policy);
  REQUIRE(bundle.ok());
  Bytes container = serialize_bundle(bundle.value());
  AnchoredRoot expected = log.root();

  Rng rng = Rng::seeded(77);
  int rejected = 0;
  constexpr int kTrials = 300;
  for (int i = 0; i < kTrials; ++i) {
    Bytes mutated = container;
    size_t pos = rng.below(mutated.size());
    mutated[pos] ^= uint8_t(1 + rng.below(255));
    VerificationReport report =
        verify_artifact_bytes(ByteView(mutated), expected, log.genesis_inputs());
    if (!report.ok()) ++rejected;
  }
  CHECK(rejected == kTrials);
}

TEST_CASE("malformed containers never crash the verifier") {
  Log log = build_log(3);
  Rng rng = Rng::seeded(13);
  for (int i = 0; i < 500; ++i) {
    Bytes junk = rng.bytes(rng.below(120));
    VerificationReport report =
        verify_artifact_bytes(ByteView(junk), log.root(), log.genesis_inputs());
    CHECK(!report.ok());
  }
}

TEST_CASE("hidden plaintext does not appear in proof bytes or report") {
  Rng rng = Rng::seeded(99);
  Log log(test_genesis());
  for (int i = 0; i < 6; ++i) {
    // Random binary payloads, 64..512 bytes.
    Bytes prompt = rng.bytes(64 + rng.below(448));
    Bytes response = rng.bytes(64 + rng.below(448));
    InteractionRecord rec = log.make_record(std::move(prompt), std::move(response), "m", 1, 1,
                                            1000 + i, rng);
    REQUIRE(log.append(std::move(rec)).ok());
  }
  DisclosurePolicy policy = open_all();
  policy[kResponse] = FieldDisclosure::Hide;
  policy[kPrompt] = FieldDisclosure::Hide;
  auto bundle = log.build_artifact({0, 2, 4}, policy);
  REQUIRE(bundle.ok());
  Bytes container = serialize_bundle(bundle.value());
  VerificationReport report = verify_artifact(bundle.value(), log.root(), log.genesis_inputs());
  Bytes report_bytes = to_bytes(report.to_string());

  for (uint64_t idx : {0ull, 2ull, 4ull}) {
    for (const Bytes* hidden : {&log.record(idx).prompt, &log.record(idx).response}) {
      for (size_t off = 0; off + 9 <= hidden->size(); off += 7) {
        ByteView window(hidden->data() + off, 9);
        CHECK(!contains(ByteView(container), window));
        CHECK(!contains(ByteView(report_bytes), window));
      }
    }
  }
}

TEST_CASE("anchors commit to prefixes; prefix artifacts verify against them") {
  Rng rng = Rng::seeded(55);
  crypto::KeyPair agent_key = crypto::KeyPair::from_rng(rng);
  GenesisInputs gi = test_genesis();
  gi.agent = agent_key.public_id();
  Log log(gi);
  for (int i = 0; i < 5; ++i) {
    REQUIRE(log.append(sample_record(log, rng, 1000 + i, std::to_string(i))).ok());
  }

  // Anchor at length 0 commits to genesis.
  CHECK(log.root_at(0).value().root == genesis(gi).root);

  auto bundle_at_5 = log.build_artifact({1, 3}, open_all());
  REQUIRE(bundle_at_5.ok());
  AnchoredRoot anchor_root = log.root();

  AnchorCommitment commitment;
  commitment.agent = agent_key.public_id();
  commitment.root_at = anchor_root;
  commitment.wallclock_ms = 123456;
  Bytes payload = anchor_payload(commitment.agent, commitment.root_at, commitment.wallclock_ms);
  commitment.signature = agent_key.sign(DomainTag::Anchor, ByteView(payload));
  CHECK(verify_anchor(commitment));

  // Log keeps growing; the prefix artifact still verifies against the anchor.
  for (int i = 5; i < 9; ++i) {
    REQUIRE(log.append(sample_record(log, rng, 1000 + i, std::to_string(i))).ok());
  }
  CHECK(verify_artifact(bundle_at_5.value(), commitment.root_at, gi).ok());
  CHECK(log.root_at(5).value() == commitment.root_at);

  CHECK(!log.root_at(99).ok());

  AnchorCommitment tampered = commitment;
  tampered.wallclock_ms += 1;
  CHECK(!verify_anchor(tampered));
}

TEST_CASE("log state serializes and replays to the same root") {
  Log log = build_log(14, 61);
  Bytes state = log.serialize();
  auto restored = Log::restore(ByteView(state));
  REQUIRE(restored.has_value());
  CHECK(restored->root() == log.root());
  CHECK(restored->size() == log.size());
  CHECK(restored->record(3).prompt == log.record(3).prompt);
}

TEST_CASE("completeness: random logs and disclosure policies always verify") {
  Rng rng = Rng::seeded(4242);
  for (int trial = 0; trial < 40; ++trial) {
    size_t n = 1 + rng.below(64);
    Log log(test_genesis(uint8_t(trial)));
    for (size_t i = 0; i < n; ++i) {
      Bytes prompt = rng.bytes(rng.below(4096));
      Bytes response = rng.bytes(rng.below(4096));
      InteractionRecord rec =
          log.make_record(std::move(prompt), std::move(response), "m", rng.below(100),
                          rng.below(100), 1000 + i, rng);
      REQUIRE(log.append(std::move(rec)).ok());
    }
    std::vector<uint64_t> selection;
    for (uint64_t i = 0; i < n; ++i) {
      if (rng.below(2) == 0) selection.push_back(i);
    }
    DisclosurePolicy policy;
    for (size_t f = 0; f < kFieldCount; ++f) {
      policy[f] = rng.below(2) == 0 ? FieldDisclosure::Open : FieldDisclosure::Hide;
    }
    auto bundle = log.build_artifact(selection, policy);
    REQUIRE(bundle.ok());
    Bytes container = serialize_bundle(bundle.value());
    CHECK(verify_artifact_bytes(ByteView(container), log.root(), log.genesis_inputs()).ok());
  }
}
