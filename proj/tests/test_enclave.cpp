#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/sha256_ref.hpp"
#include "support/world.hpp"

using namespace memtrade;
using namespace testsupport;
using crypto::DomainTag;

TEST_CASE("same boot inputs give the same measurement but fresh agent keys") {
  TestWorld world(101);
  std::array<uint8_t, 32> owner_seed = world.rng.bytes32();
  enclave::Enclave a = enclave::Enclave::boot(world.boot_params(0, owner_seed), Rng::seeded(1));
  enclave::Enclave b = enclave::Enclave::boot(world.boot_params(0, owner_seed), Rng::seeded(2));
  CHECK(a.measurement().value == b.measurement().value);
  CHECK(a.agent_public() != b.agent_public());

  // Same owner seed hashes identically across boots.
  CHECK(a.measurement().owner_seed_hash == b.measurement().owner_seed_hash);
}

TEST_CASE("measurement recomputes externally from published components") {
  TestWorld world(102);
  std::array<uint8_t, 32> owner_seed = world.rng.bytes32();
  enclave::Enclave e = enclave::Enclave::boot(world.boot_params(3, owner_seed), Rng::seeded(4));
  const enclave::Measurement& m = e.measurement();
  enclave::Measurement recomputed = enclave::Measurement::compute(
      m.image_template_hash, m.task_description_hash, m.slot_id, m.owner_seed_hash);
  CHECK(recomputed.value == m.value);

  // The genesis binds the gang configuration to the measured identity.
  ledger::GenesisInputs expected{
      enclave::gang_config_hash(m.value, world.tmpl.model_provider), e.agent_public()};
  CHECK(e.genesis_inputs() == expected);
}

TEST_CASE("attestation verifies under the vendor root and resists tampering") {
  TestWorld world(103);
  std::array<uint8_t, 32> owner_seed = world.rng.bytes32();
  enclave::Enclave e = enclave::Enclave::boot(world.boot_params(0, owner_seed), Rng::seeded(9));
  std::array<uint8_t, 16> nonce = world.rng.bytes16();
  enclave::AttestationReport report = e.attest(nonce);

  crypto::PublicIdentity vendor = simroot::sim_vendor_root().public_id();
  CHECK(enclave::verify_attestation(report, vendor));

  enclave::AttestationReport bumped = report;
  bumped.security_version += 1;
  CHECK(!enclave::verify_attestation(bumped, vendor));

  enclave::AttestationReport wrong_nonce = report;
  wrong_nonce.nonce[0] ^= 1;
  CHECK(!enclave::verify_attestation(wrong_nonce, vendor));

  crypto::KeyPair other = crypto::KeyPair::from_seed(world.rng.bytes32());
  CHECK(!enclave::verify_attestation(report, other.public_id()));
}

TEST_CASE("proxy_call logs redacted transcripts and advances the root") {
  TestWorld world(104);
  auto agent = world.join();
  REQUIRE(agent.ok());
  enclave::Enclave& e = *agent.value().enclave_;

  ledger::AnchoredRoot before = e.log().root();
  Bytes prompt = to_bytes("clean row 7");
  auto response = e.proxy_call(*world.provider, ByteView(prompt));
  REQUIRE(response.ok());
  CHECK(e.log().size() == 1);
  CHECK(e.log().root().length == before.length + 1);
  CHECK(response.value() == harness::MockProvider::respond_to(ByteView(prompt)));

  // Prompt containing the literal credential is logged masked.
  Bytes leaky = to_bytes("use key ");
  append_bytes(leaky, ByteView(world.credential));
  append_bytes(leaky, ByteView(to_bytes(" for auth")));
  REQUIRE(e.proxy_call(*world.provider, ByteView(leaky)).ok());
  const ledger::InteractionRecord& logged = e.log().record(1);
  CHECK(!contains(ByteView(logged.prompt), ByteView(world.credential)));
  CHECK(contains(ByteView(logged.prompt),
                 ByteView(enclave::kRedactionMask.data(), enclave::kRedactionMask.size())));

  // Token metadata mirrors the provider's own accounting.
  auto acc = world.provider->accounting_for(ByteView(world.credential));
  uint64_t logged_in = e.log().record(0).token_in + e.log().record(1).token_in;
  uint64_t logged_out = e.log().record(0).token_out + e.log().record(1).token_out;
  CHECK(acc.calls == 2);
  CHECK(acc.token_in == logged_in);
  CHECK(acc.token_out == logged_out);
}

TEST_CASE("provider with the wrong key is refused and nothing is logged") {
  TestWorld world(105);
  auto agent = world.join();
  REQUIRE(agent.ok());
  enclave::Enclave& e = *agent.value().enclave_;

  harness::MockProvider imposter(crypto::KeyPair::from_seed(world.rng.bytes32()), "mock-model-1");
  auto refused = e.proxy_call(imposter, ByteView(to_bytes("hello")));
  CHECK(!refused.ok());
  CHECK(e.log().size() == 0);

  harness::MockProvider wrong_model(crypto::KeyPair::from_rng(world.rng), "other-model");
  CHECK(!e.proxy_call(wrong_model, ByteView(to_bytes("hello"))).ok());
  CHECK(e.log().size() == 0);
}

TEST_CASE("transport failure logs nothing and is retriable") {
  TestWorld world(106);
  auto agent = world.join();
  REQUIRE(agent.ok());
  enclave::Enclave& e = *agent.value().enclave_;
  world.provider->fail_next_call();
  CHECK(!e.proxy_call(*world.provider, ByteView(to_bytes("p"))).ok());
  CHECK(e.log().size() == 0);
  CHECK(e.proxy_call(*world.provider, ByteView(to_bytes("p"))).ok());
  CHECK(e.log().size() == 1);
}

namespace {

struct DeliveredArtifact {
  Bytes container;
  delivery::Key key{};
  ledger::ArtifactBundle bundle;
};

DeliveredArtifact make_delivery(TestWorld& world, enclave::Enclave& e, int calls) {
  for (int i = 0; i < calls; ++i) {
    auto r = e.proxy_call(*world.provider, ByteView(to_bytes("item " + std::to_string(i))));
    REQUIRE(r.ok());
  }
  std::vector<uint64_t> selection;
  for (uint64_t i = 0; i < e.log().size(); ++i) selection.push_back(i);
  auto bundle = e.build_artifact(selection, ledger::open_all());
  REQUIRE(bundle.ok());
  DeliveredArtifact out;
  out.bundle = bundle.value();
  out.key = delivery::make_key(world.rng);
  out.container =
      delivery::encrypt(out.key, ByteView(ledger::serialize_bundle(bundle.value())), world.rng);
  return out;
}

}  // namespace

TEST_CASE("receipts bind trade, buyer, artifact hash, and root") {
  TestWorld world(107);
  auto agent = world.join();
  REQUIRE(agent.ok());
  enclave::Enclave& e = *agent.value().enclave_;
  DeliveredArtifact d = make_delivery(world, e, 4);

  crypto::KeyPair buyer = crypto::KeyPair::from_rng(world.rng);
  auto issued = e.issue_receipt(7, buyer.public_id(), ByteView(d.container), d.key);
  REQUIRE(issued.ok());
  const enclave::DeliveryReceipt& receipt = issued.value().receipt;

  CHECK(enclave::verify_receipt(receipt, e.agent_public()));
  CHECK(receipt.artifact_hash == ledger::artifact_hash(ByteView(d.container)));
  CHECK(receipt.referenced_root == e.log().root());
  CHECK(enclave::verify_token(issued.value().token));

  enclave::DeliveryReceipt forged = receipt;
  forged.trade_id += 1;
  CHECK(!enclave::verify_receipt(forged, e.agent_public()));

  // Re-issuing for the same (trade, buyer, artifact) is deterministic.
  auto again = e.issue_receipt(7, buyer.public_id(), ByteView(d.container), d.key);
  REQUIRE(again.ok());
  CHECK(again.value().receipt.enclave_signature == receipt.enclave_signature);

  // Second receipt for the same trade with a different buyer is refused.
  crypto::KeyPair other_buyer = crypto::KeyPair::from_rng(world.rng);
  CHECK(!e.issue_receipt(7, other_buyer.public_id(), ByteView(d.container), d.key).ok());
}

TEST_CASE("enclave refuses artifacts that do not match its own log") {
  TestWorld world(108);
  auto agent = world.join();
  REQUIRE(agent.ok());
  enclave::Enclave& e = *agent.value().enclave_;
  DeliveredArtifact d = make_delivery(world, e, 3);
  crypto::KeyPair buyer = crypto::KeyPair::from_rng(world.rng);

  // Forged opened value, re-encrypted: plaintext parses but mismatches the log.
  ledger::ArtifactBundle forged = d.bundle;
  forged.artifact.interactions[1].fields[ledger::kResponse].value =
      canon::Value::bytes("fabricated response").encode();
  Bytes forged_container =
      delivery::encrypt(d.key, ByteView(ledger::serialize_bundle(forged)), world.rng);
  CHECK(!e.issue_receipt(9, buyer.public_id(), ByteView(forged_container), d.key).ok());

  // Tampered ciphertext fails authenticated decryption.
  Bytes corrupted = d.container;
  corrupted[corrupted.size() / 2] ^= 1;
  CHECK(!e.issue_receipt(9, buyer.public_id(), ByteView(corrupted), d.key).ok());

  // Artifact from a different enclave in the same gang is refused.
  auto stranger = world.join();
  REQUIRE(stranger.ok());
  DeliveredArtifact foreign = make_delivery(world, *stranger.value().enclave_, 3);
  CHECK(!e.issue_receipt(9, buyer.public_id(), ByteView(foreign.container), foreign.key).ok());
}

TEST_CASE("resale confirmation policy table") {
  for (bool resale_allowed : {false, true}) {
    TestWorld world(109, "", 1, resale_allowed);
    auto agent = world.join();
    REQUIRE(agent.ok());
    enclave::Enclave& e = *agent.value().enclave_;
    DeliveredArtifact d = make_delivery(world, e, 2);
    crypto::KeyPair buyer = crypto::KeyPair::from_rng(world.rng);
    crypto::KeyPair third = crypto::KeyPair::from_rng(world.rng);
    crypto::Digest hash = ledger::artifact_hash(ByteView(d.container));
    REQUIRE(e.issue_receipt(1, buyer.public_id(), ByteView(d.container), d.key).ok());

    // Original buyer always gets a fresh confirmation.
    auto own = e.confirm_artifact(hash, buyer.public_id());
    REQUIRE(own.ok());
    CHECK(enclave::verify_confirmation(own.value(), e.agent_public()));

    auto third_unpaid = e.confirm_artifact(hash, third.public_id(), false);
    CHECK(!third_unpaid.ok());

    auto third_paid = e.confirm_artifact(hash, third.public_id(), true);
    CHECK(third_paid.ok() == resale_allowed);
    if (third_paid.ok()) {
      CHECK(third_paid.value().requester == third.public_id());
    }

    crypto::Digest unknown;
    unknown.v.fill(0xEE);
    CHECK(!e.confirm_artifact(unknown, buyer.public_id()).ok());
  }
}

TEST_CASE("inheritance requires the measured owner seed") {
  TestWorld world(110);
  auto predecessor = world.join();
  auto successor = world.join();
  REQUIRE(predecessor.ok());
  REQUIRE(successor.ok());
  enclave::Enclave& pred = *predecessor.value().enclave_;
  enclave::Enclave& succ = *successor.value().enclave_;

  std::array<uint8_t, 32> wrong_seed = world.rng.bytes32();
  CHECK(!pred.authorize_inheritance(wrong_seed, succ.agent_public()).ok());

  auto record = pred.authorize_inheritance(predecessor.value().owner_seed, succ.agent_public());
  REQUIRE(record.ok());
  CHECK(enclave::verify_inheritance(record.value()));
  CHECK(record.value().root_at_transfer == pred.log().root());

  enclave::InheritanceRecord broken = record.value();
  broken.owner_authorization.sig[0] ^= 1;
  CHECK(!enclave::verify_inheritance(broken));
  CHECK(!succ.accept_inheritance(broken).ok());

  CHECK(succ.accept_inheritance(record.value()).ok());
  CHECK(succ.inherited().size() == 1);

  // Record naming someone else as successor is rejected on import.
  CHECK(!pred.accept_inheritance(record.value()).ok());
}

TEST_CASE("signed anchors delegate to the ledger prefix roots") {
  TestWorld world(111);
  auto agent = world.join();
  REQUIRE(agent.ok());
  enclave::Enclave& e = *agent.value().enclave_;
  for (int i = 0; i < 6; ++i) {
    REQUIRE(e.proxy_call(*world.provider, ByteView(to_bytes("x " + std::to_string(i)))).ok());
  }
  auto commitment = e.sign_anchor(4, 555000);
  REQUIRE(commitment.ok());
  CHECK(ledger::verify_anchor(commitment.value()));
  CHECK(commitment.value().root_at == e.log().root_at(4).value());
  CHECK(!e.sign_anchor(99, 555000).ok());
}

TEST_CASE("least interface: adversarial calls never disturb committed prefixes") {
  TestWorld world(112);
  auto agent = world.join();
  REQUIRE(agent.ok());
  enclave::Enclave& e = *agent.value().enclave_;
  DeliveredArtifact d = make_delivery(world, e, 5);
  std::vector<crypto::Digest> prefix_roots;
  for (uint64_t i = 0; i <= e.log().size(); ++i) {
    prefix_roots.push_back(e.log().root_at(i).value().root);
  }

  crypto::KeyPair buyer = crypto::KeyPair::from_rng(world.rng);
  Rng junk = Rng::seeded(4444);

  // Adversarial arguments against every exported operation.
  harness::MockProvider imposter(crypto::KeyPair::from_rng(junk), "mock-model-1");
  (void)e.proxy_call(imposter, ByteView(to_bytes("junk")));
  (void)e.issue_receipt(1, buyer.public_id(), ByteView(junk.bytes(64)), d.key);
  (void)e.issue_receipt(1, buyer.public_id(), ByteView(d.container),
                        delivery::make_key(junk));
  crypto::Digest bogus;
  bogus.v.fill(2);
  (void)e.confirm_artifact(bogus, buyer.public_id(), true);
  (void)e.authorize_inheritance(junk.bytes32(), buyer.public_id());
  (void)e.sign_anchor(1000, 1);
  enclave::InheritanceRecord garbage;
  (void)e.accept_inheritance(garbage);
  (void)e.build_artifact({999}, ledger::open_all());
  (void)e.attest(junk.bytes16());

  for (uint64_t i = 0; i < prefix_roots.size(); ++i) {
    CHECK(e.log().root_at(i).value().root == prefix_roots[i]);
  }
  // A legitimate call still only appends.
  REQUIRE(e.proxy_call(*world.provider, ByteView(to_bytes("tail"))).ok());
  for (uint64_t i = 0; i < prefix_roots.size(); ++i) {
    CHECK(e.log().root_at(i).value().root == prefix_roots[i]);
  }
}

TEST_CASE("credential bytes never enter committed preimages across random sessions") {
  TestWorld world(113);
  auto agent = world.join();
  REQUIRE(agent.ok());
  enclave::Enclave& e = *agent.value().enclave_;
  Rng rng = Rng::seeded(999);
  for (int i = 0; i < 30; ++i) {
    Bytes prompt = rng.bytes(rng.below(64));
    if (rng.below(3) == 0) append_bytes(prompt, ByteView(world.credential));
    if (rng.below(3) == 0) append_bytes(prompt, ByteView(to_bytes(" trailing")));
    REQUIRE(e.proxy_call(*world.provider, ByteView(prompt)).ok());
  }
  for (uint64_t i = 0; i < e.log().size(); ++i) {
    const ledger::InteractionRecord& rec = e.log().record(i);
    CHECK(!contains(ByteView(rec.prompt), ByteView(world.credential)));
    CHECK(!contains(ByteView(rec.response), ByteView(world.credential)));
    // The committed leaf encodings stay clean as well.
    for (size_t f = 0; f < ledger::kFieldCount; ++f) {
      Bytes leaf = ledger::field_value(rec, f).encode();
      CHECK(!contains(ByteView(leaf), ByteView(world.credential)));
    }
  }
}

TEST_CASE("enclave state round-trips through serialization") {
  TestWorld world(114);
  auto agent = world.join();
  REQUIRE(agent.ok());
  enclave::Enclave& e = *agent.value().enclave_;
  DeliveredArtifact d = make_delivery(world, e, 3);
  crypto::KeyPair buyer = crypto::KeyPair::from_rng(world.rng);
  REQUIRE(e.issue_receipt(5, buyer.public_id(), ByteView(d.container), d.key).ok());

  Bytes state = e.serialize_state();
  auto restored = enclave::Enclave::restore_state(ByteView(state), simroot::sim_vendor_root());
  REQUIRE(restored.ok());
  CHECK(restored.value().agent_public() == e.agent_public());
  CHECK(restored.value().log().root() == e.log().root());
  CHECK(restored.value().measurement().value == e.measurement().value);

  // Buyer binding survives the round trip.
  crypto::KeyPair other = crypto::KeyPair::from_rng(world.rng);
  CHECK(!restored.value().issue_receipt(5, other.public_id(), ByteView(d.container), d.key).ok());

  // Structurally broken state files fail cleanly.
  Bytes truncated(state.begin(), state.begin() + static_cast<ptrdiff_t>(state.size() / 2));
  CHECK(!enclave::Enclave::restore_state(ByteView(truncated), simroot::sim_vendor_root()).ok());
}
