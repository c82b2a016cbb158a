#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/world.hpp"

using namespace memtrade;
using namespace testsupport;

TEST_CASE("templates hash over every field") {
  TestWorld world(201);
  gang::GangTemplate altered = world.tmpl;
  altered.task_description += " (amended)";
  CHECK(altered.gang_id() != world.tmpl.gang_id());

  gang::GangTemplate policy_change = world.tmpl;
  policy_change.trade_policy.resale_allowed = !policy_change.trade_policy.resale_allowed;
  CHECK(policy_change.gang_id() != world.tmpl.gang_id());

  CHECK(world.tmpl.gang_id() == world.tmpl.gang_id());
}

TEST_CASE("duplicate templates and incomplete templates are rejected") {
  TestWorld world(202);
  auto duplicate = world.platform->create_gang(world.tmpl);
  CHECK(!duplicate.ok());

  gang::GangTemplate incomplete = world.tmpl;
  incomplete.task_description = "fresh task so the id differs";
  incomplete.code_reference = "";
  CHECK(!world.platform->create_gang(incomplete).ok());

  gang::GangTemplate fresh = world.tmpl;
  fresh.task_description = "another task";
  auto listed = world.platform->create_gang(fresh);
  REQUIRE(listed.ok());
  CHECK(world.platform->members(listed.value()).value().empty());
}

TEST_CASE("honest registration issues a certificate and grows the directory") {
  TestWorld world(203);
  CHECK(world.platform->members(world.gang_id).value().empty());
  auto agent = world.join();
  REQUIRE(agent.ok());
  CHECK(world.platform->members(world.gang_id).value().size() == 1);
  CHECK(gang::verify_certificate(agent.value().cert, world.platform_key.public_id()));
  CHECK(world.platform->verify_membership(agent.value().cert));

  gang::MembershipCertificate forged = agent.value().cert;
  forged.security_version += 1;
  CHECK(!gang::verify_certificate(forged, world.platform_key.public_id()));
  CHECK(!world.platform->verify_membership(forged));
}

TEST_CASE("registration matrix: certificate only in the all-correct cell") {
  // {task hash} x {image hash} x {nonce} x {version vs minimum}
  for (int mask = 0; mask < 16; ++mask) {
    bool task_ok = mask & 1;
    bool image_ok = mask & 2;
    bool nonce_ok = mask & 4;
    bool version_ok = mask & 8;

    TestWorld world(204, "", /*min_version=*/2);
    auto reservation = world.platform->reserve_slot(world.gang_id);
    REQUIRE(reservation.ok());

    std::array<uint8_t, 32> owner_seed = world.rng.bytes32();
    enclave::BootParams params = world.boot_params(reservation.value().slot_id, owner_seed,
                                                   version_ok ? 2 : 1);
    if (!task_ok) {
      params.task_description_hash = crypto::digest(crypto::DomainTag::Field, to_bytes("other"));
    }
    if (!image_ok) {
      params.image_template_hash = crypto::digest(crypto::DomainTag::Field, to_bytes("rogue"));
    }
    enclave::Enclave e = enclave::Enclave::boot(std::move(params), Rng::seeded(mask));
    std::array<uint8_t, 16> nonce = nonce_ok ? reservation.value().nonce : world.rng.bytes16();

    auto cert = world.platform->register_member(world.gang_id, reservation.value().slot_id,
                                                e.attest(nonce));
    bool expect_issue = task_ok && image_ok && nonce_ok && version_ok;
    CHECK(cert.ok() == expect_issue);
  }
}

TEST_CASE("a consumed nonce cannot be replayed") {
  TestWorld world(205);
  auto reservation = world.platform->reserve_slot(world.gang_id);
  REQUIRE(reservation.ok());
  std::array<uint8_t, 32> owner_seed = world.rng.bytes32();
  enclave::Enclave e = enclave::Enclave::boot(
      world.boot_params(reservation.value().slot_id, owner_seed), Rng::seeded(1));
  enclave::AttestationReport report = e.attest(reservation.value().nonce);
  REQUIRE(world.platform->register_member(world.gang_id, reservation.value().slot_id, report).ok());
  auto replay = world.platform->register_member(world.gang_id, reservation.value().slot_id, report);
  CHECK(!replay.ok());
}

TEST_CASE("a report for gang A is rejected by gang B") {
  TestWorld world(206);
  gang::GangTemplate other = world.tmpl;
  other.task_description = "a different task entirely";
  auto other_id = world.platform->create_gang(other);
  REQUIRE(other_id.ok());

  auto reservation_b = world.platform->reserve_slot(other_id.value());
  REQUIRE(reservation_b.ok());
  // Enclave measured for gang A's task presents to gang B.
  std::array<uint8_t, 32> owner_seed = world.rng.bytes32();
  enclave::Enclave e = enclave::Enclave::boot(
      world.boot_params(reservation_b.value().slot_id, owner_seed), Rng::seeded(2));
  auto cert = world.platform->register_member(other_id.value(), reservation_b.value().slot_id,
                                              e.attest(reservation_b.value().nonce));
  CHECK(!cert.ok());
}

TEST_CASE("slots are unique and dense in registration order") {
  TestWorld world(207);
  for (int i = 0; i < 5; ++i) REQUIRE(world.join().ok());
  auto members = world.platform->members(world.gang_id);
  REQUIRE(members.ok());
  REQUIRE(members.value().size() == 5);
  for (uint64_t i = 0; i < 5; ++i) {
    CHECK(members.value()[i].slot_id == i);
  }
}

TEST_CASE("re-registration supersedes and enforces version increase and owner match") {
  TestWorld world(208);
  auto agent = world.join();
  REQUIRE(agent.ok());
  uint64_t slot = agent.value().cert.slot_id;

  auto rereg = world.platform->reserve_reregistration(world.gang_id, slot);
  REQUIRE(rereg.ok());
  CHECK(rereg.value().slot_id == slot);

  // Same version is refused.
  enclave::Enclave same_version = enclave::Enclave::boot(
      world.boot_params(slot, agent.value().owner_seed, 1), Rng::seeded(3));
  CHECK(!world.platform->register_member(world.gang_id, slot,
                                         same_version.attest(rereg.value().nonce))
             .ok());

  // Different owner seed is refused.
  auto rereg2 = world.platform->reserve_reregistration(world.gang_id, slot);
  REQUIRE(rereg2.ok());
  enclave::Enclave stranger = enclave::Enclave::boot(
      world.boot_params(slot, world.rng.bytes32(), 2), Rng::seeded(4));
  CHECK(!world.platform->register_member(world.gang_id, slot,
                                         stranger.attest(rereg2.value().nonce))
             .ok());

  // Patched enclave with the same owner succeeds; old cert is superseded.
  auto rereg3 = world.platform->reserve_reregistration(world.gang_id, slot);
  REQUIRE(rereg3.ok());
  enclave::Enclave patched = enclave::Enclave::boot(
      world.boot_params(slot, agent.value().owner_seed, 2), Rng::seeded(5));
  auto new_cert = world.platform->register_member(world.gang_id, slot,
                                                  patched.attest(rereg3.value().nonce));
  REQUIRE(new_cert.ok());
  CHECK(new_cert.value().security_version == 2);

  CHECK(!world.platform->verify_membership(agent.value().cert));  // superseded
  CHECK(world.platform->verify_membership(new_cert.value()));

  auto members = world.platform->members(world.gang_id);
  REQUIRE(members.ok());
  REQUIRE(members.value().size() == 2);
  CHECK(members.value()[0].status == gang::MemberStatus::Superseded);
  CHECK(members.value()[1].status == gang::MemberStatus::Active);

  // Supersession is monotone in the security version.
  CHECK(members.value()[0].certificate.security_version <
        members.value()[1].certificate.security_version);

  // Re-registration for an unregistered slot is refused outright.
  CHECK(!world.platform->reserve_reregistration(world.gang_id, 77).ok());
}

TEST_CASE("vulnerability bulletin flags outdated certificates") {
  TestWorld world(209);
  auto v1_agent = world.join(1);
  REQUIRE(v1_agent.ok());
  auto v2_agent = world.join(2);
  REQUIRE(v2_agent.ok());

  // Operator signature required.
  crypto::KeyPair rando = crypto::KeyPair::from_rng(world.rng);
  crypto::Signature bad_sig = rando.sign(
      crypto::DomainTag::Bulletin, ByteView(market::vulnerability_payload(1, "note")));
  CHECK(!world.platform->publish_vulnerability(1, "note", bad_sig).ok());

  REQUIRE(world.platform
              ->publish_vulnerability(1, "speculative fault in v1",
                                      world.platform->sign_vulnerability(1, "speculative fault in v1"))
              .ok());

  CHECK(!world.platform->verify_membership(v1_agent.value().cert));
  CHECK(world.platform->verify_membership(v2_agent.value().cert));
  CHECK(world.platform->vulnerabilities().size() == 1);
}

TEST_CASE("member list document verifies under the platform key") {
  TestWorld world(210);
  REQUIRE(world.join().ok());
  REQUIRE(world.join().ok());
  auto document = world.platform->member_list_document(world.gang_id);
  REQUIRE(document.ok());
  CHECK(gang::verify_member_list_document(ByteView(document.value()),
                                          world.platform_key.public_id()));
  Bytes tampered = document.value();
  tampered[tampered.size() / 2] ^= 1;
  CHECK(!gang::verify_member_list_document(ByteView(tampered),
                                           world.platform_key.public_id()));
  crypto::KeyPair other = crypto::KeyPair::from_rng(world.rng);
  CHECK(!gang::verify_member_list_document(ByteView(document.value()), other.public_id()));
}

TEST_CASE("issuance gate: every issued certificate re-verifies against its template") {
  TestWorld world(211);
  for (int i = 0; i < 4; ++i) REQUIRE(world.join(1 + (i % 2)).ok());
  auto members = world.platform->members(world.gang_id);
  REQUIRE(members.ok());
  for (const gang::MemberRecord& record : members.value()) {
    CHECK(record.measurement.image_template_hash == world.tmpl.image_template_hash);
    CHECK(record.measurement.task_description_hash == world.tmpl.task_hash());
    CHECK(record.measurement.slot_id == record.slot_id);
    enclave::Measurement recomputed = enclave::Measurement::compute(
        record.measurement.image_template_hash, record.measurement.task_description_hash,
        record.measurement.slot_id, record.measurement.owner_seed_hash);
    CHECK(recomputed.value == record.certificate.measurement_value);
    CHECK(record.certificate.security_version >= world.tmpl.min_security_version);
  }
}
