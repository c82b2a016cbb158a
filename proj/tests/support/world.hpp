#pragma once

// Shared fixture: a deterministic platform + gang + registered agents.

#include <memory>
#include <stdexcept>

#include "memtrade/market.hpp"
#include "memtrade/provider.hpp"
#include "memtrade/scenario.hpp"
#include "memtrade/simroot.hpp"

namespace testsupport {

using namespace memtrade;

struct TestAgent {
  std::array<uint8_t, 32> owner_seed{};
  std::unique_ptr<enclave::Enclave> enclave_;
  gang::MembershipCertificate cert;
};

struct TestWorld {
  std::shared_ptr<uint64_t> clock_state = std::make_shared<uint64_t>(1'700'000'000'000ull);
  Rng rng;
  crypto::KeyPair platform_key;
  std::unique_ptr<harness::MockProvider> provider;
  Bytes credential;
  std::unique_ptr<market::Platform> platform;
  gang::GangTemplate tmpl;
  crypto::Digest gang_id;

  explicit TestWorld(uint64_t seed, const std::string& journal_path = "",
                     uint64_t min_version = 1, bool resale = false)
      : rng(Rng::seeded(seed)), platform_key(crypto::KeyPair::from_rng(rng)) {
    provider = std::make_unique<harness::MockProvider>(crypto::KeyPair::from_rng(rng),
                                                       "mock-model-1");
    credential = rng.bytes(20);

    market::Platform::Config config;
    config.platform_key = platform_key;
    config.vendor_root = simroot::sim_vendor_root().public_id();
    config.journal_path = journal_path;
    auto state = clock_state;
    config.clock = [state] { return *state += 7; };
    config.rng = Rng::seeded(seed ^ 0xabcdef12345ull);
    auto created = market::Platform::create(std::move(config));
    if (!created.ok()) throw std::runtime_error(created.error());
    platform = std::make_unique<market::Platform>(std::move(created).take());

    tmpl.task_description = "test task: certified calls against the mock provider";
    tmpl.image_template_hash = crypto::digest(crypto::DomainTag::Field, to_bytes("image:test:v1"));
    tmpl.model_provider = provider->public_config();
    tmpl.trade_policy.resale_allowed = resale;
    tmpl.code_reference = "gangs/test-v1";
    tmpl.min_security_version = min_version;
    auto created_gang = platform->create_gang(tmpl);
    if (!created_gang.ok()) throw std::runtime_error(created_gang.error());
    gang_id = created_gang.value();
  }

  enclave::BootParams boot_params(uint64_t slot_id, const std::array<uint8_t, 32>& owner_seed,
                                  uint64_t security_version = 1) {
    enclave::BootParams params;
    params.image_template_hash = tmpl.image_template_hash;
    params.task_description_hash = tmpl.task_hash();
    params.slot_id = slot_id;
    params.owner_seed = owner_seed;
    params.security_version = security_version;
    params.provider.pub = tmpl.model_provider;
    params.provider.credential = credential;
    params.policy.resale_confirmation_allowed = tmpl.trade_policy.resale_allowed;
    params.vendor_root = simroot::sim_vendor_root();
    auto state = clock_state;
    params.clock = [state] { return *state += 13; };
    return params;
  }

  Result<TestAgent> join(uint64_t security_version = 1) {
    using R = Result<TestAgent>;
    TestAgent agent;
    agent.owner_seed = rng.bytes32();
    auto reservation = platform->reserve_slot(gang_id);
    if (!reservation.ok()) return R::failure(reservation.error());
    agent.enclave_ = std::make_unique<enclave::Enclave>(enclave::Enclave::boot(
        boot_params(reservation.value().slot_id, agent.owner_seed, security_version),
        Rng::seeded(rng.next_u64())));
    auto cert = platform->register_member(gang_id, reservation.value().slot_id,
                                          agent.enclave_->attest(reservation.value().nonce));
    if (!cert.ok()) return R::failure(cert.error());
    agent.cert = cert.value();
    return agent;
  }

  // Seller-side listing of `count` certified calls, full disclosure.
  struct ListedArtifact {
    uint64_t listing_id = 0;
    Bytes delivered;
    delivery::Key key{};
    ledger::ArtifactBundle bundle;
  };

  Result<ListedArtifact> run_and_list(TestAgent& agent, int calls, uint64_t price) {
    using R = Result<ListedArtifact>;
    for (int i = 0; i < calls; ++i) {
      std::string prompt = "task: item " + std::to_string(i);
      auto response = agent.enclave_->proxy_call(*provider, ByteView(to_bytes(prompt)));
      if (!response.ok()) return R::failure(response.error());
    }
    std::vector<uint64_t> selection;
    for (uint64_t i = 0; i < agent.enclave_->log().size(); ++i) selection.push_back(i);
    auto bundle = agent.enclave_->build_artifact(selection, ledger::open_all());
    if (!bundle.ok()) return R::failure(bundle.error());

    ListedArtifact out;
    out.bundle = bundle.value();
    out.key = delivery::make_key(rng);
    Bytes plain = ledger::serialize_bundle(bundle.value());
    out.delivered = delivery::encrypt(out.key, ByteView(plain), rng);

    ledger::DisclosurePolicy ad_policy = ledger::hide_all();
    ad_policy[ledger::kPrompt] = ledger::FieldDisclosure::Open;
    auto ad = agent.enclave_->build_artifact(selection, ad_policy);
    if (!ad.ok()) return R::failure(ad.error());

    market::ListingDraft draft;
    draft.seller_cert = agent.cert;
    draft.price = price;
    draft.metadata = harness::make_metadata(agent.enclave_->log(),
                                            ledger::serialize_bundle(ad.value()));
    draft.resale_allowed = tmpl.trade_policy.resale_allowed;
    draft.seller_endpoint = "agent://test";
    draft.encrypted_artifact_hash = ledger::artifact_hash(ByteView(out.delivered));
    auto listing = platform->post_listing(draft);
    if (!listing.ok()) return R::failure(listing.error());
    out.listing_id = listing.value();
    return out;
  }

  crypto::KeyPair funded_buyer(uint64_t amount) {
    crypto::KeyPair buyer = crypto::KeyPair::from_rng(rng);
    platform->open_account(buyer.public_id());
    platform->deposit(buyer.public_id(), amount);
    return buyer;
  }

  Result<uint64_t> lock(uint64_t listing_id, const crypto::KeyPair& buyer, uint64_t amount,
                        const std::string& idem = "k1") {
    Bytes payload = market::lock_payload(listing_id, amount, idem);
    return platform->lock_funds(listing_id, buyer.public_id(), amount, idem,
                                buyer.sign(crypto::DomainTag::Account, ByteView(payload)));
  }
};

}  // namespace testsupport
