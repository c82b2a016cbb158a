#include "memtrade/scenario.hpp"

#include <json.hpp>

#include <memory>
#include <sstream>

#include "memtrade/delivery.hpp"
#include "memtrade/simroot.hpp"

namespace memtrade::harness {

using crypto::DomainTag;
using crypto::KeyPair;
using crypto::PublicIdentity;

bool ScenarioReport::ok() const {
  if (steps.empty()) return false;
  for (const ScenarioStep& s : steps) {
    if (!s.pass) return false;
  }
  return true;
}

std::string ScenarioReport::to_string() const {
  std::ostringstream out;
  out << "scenario: " << name << "\n";
  for (const ScenarioStep& s : steps) {
    out << (s.pass ? "[ok]   " : "[FAIL] ") << s.name;
    if (!s.detail.empty()) out << ": " << s.detail;
    out << "\n";
  }
  out << "final root: " << seller_final_root << "\n";
  if (!successor_final_root.empty()) {
    out << "successor final root: " << successor_final_root << "\n";
  }
  out << (ok() ? "result: PASS" : "result: FAIL") << "\n";
  return out.str();
}

std::string ScenarioReport::to_json_string() const {
  nlohmann::json steps_json = nlohmann::json::array();
  for (const ScenarioStep& s : steps) {
    steps_json.push_back({{"name", s.name}, {"pass", s.pass}, {"detail", s.detail}});
  }
  nlohmann::json j{{"scenario", name},
                   {"steps", steps_json},
                   {"final_root", seller_final_root},
                   {"ok", ok()}};
  if (!successor_final_root.empty()) j["successor_final_root"] = successor_final_root;
  return j.dump(2);
}

const std::vector<std::string>& toy_dataset() {
  static const std::vector<std::string> kRows = {
      "  alice , new york ,  3 ",
      "bob,  chicago ,12",
      "  Carol ,  Boston,5",
      "dave ,  austin ,  7",
      "eve,   seattle , 1 ",
      "  frank, denver,9",
      "Grace ,  miami ,  14",
      "heidi,   portland,2",
      " ivan , phoenix , 6",
      "judy ,  dallas,8",
      "  mallory, boston , 4 ",
      "niaj,   atlanta ,11",
      " Olivia , houston,  13",
      "peggy,  detroit , 10",
      "  quentin , memphis,15",
      "rupert,   oakland ,  16",
      " Sybil , tucson, 17 ",
      "trent,  fresno ,18",
      "  ursula, omaha ,  19",
      "victor ,  raleigh,20",
  };
  return kRows;
}

market::CertifiedMetadata make_metadata(const ledger::Log& log, Bytes advertisement) {
  market::CertifiedMetadata m;
  m.claimed_root = log.root();
  m.interaction_count = log.size();
  for (uint64_t i = 0; i < log.size(); ++i) {
    const ledger::InteractionRecord& rec = log.record(i);
    m.total_token_in += rec.token_in;
    m.total_token_out += rec.token_out;
  }
  if (log.size() > 0) {
    m.first_timestamp_ms = log.record(0).timestamp_ms;
    m.last_timestamp_ms = log.record(log.size() - 1).timestamp_ms;
  }
  m.advertisement = std::move(advertisement);
  return m;
}

namespace {

struct Recorder {
  ScenarioReport& report;
  void check(std::string name, bool pass, std::string detail = "") {
    report.steps.push_back(ScenarioStep{std::move(name), pass, std::move(detail)});
  }
};

enclave::Clock logical_clock(const std::shared_ptr<uint64_t>& state) {
  return [state] { return *state += 1000; };
}

struct World {
  std::shared_ptr<uint64_t> clock_state;
  Rng rng;
  KeyPair platform_key;
  std::unique_ptr<market::Platform> platform;
  std::unique_ptr<MockProvider> provider;
  Bytes credential;

  explicit World(uint64_t seed, const std::string& journal_path, const std::string& model_name)
      : clock_state(std::make_shared<uint64_t>(1'700'000'000'000ull)),
        rng(Rng::seeded(seed)),
        platform_key(KeyPair::from_rng(rng)) {
    provider = std::make_unique<MockProvider>(KeyPair::from_rng(rng), model_name);
    credential = rng.bytes(24);
    market::Platform::Config config;
    config.platform_key = platform_key;
    config.vendor_root = simroot::sim_vendor_root().public_id();
    config.journal_path = journal_path;
    config.clock = logical_clock(clock_state);
    config.rng = Rng::seeded(seed ^ 0x9e3779b97f4a7c15ull);
    Result<market::Platform> created = market::Platform::create(std::move(config));
    if (!created.ok()) throw std::runtime_error("platform: " + created.error());
    platform = std::make_unique<market::Platform>(std::move(created).take());
  }
};

struct Agent {
  std::array<uint8_t, 32> owner_seed{};
  std::unique_ptr<enclave::Enclave> enclave_;
  gang::MembershipCertificate cert;
};

Result<Agent> join_gang(World& world, const gang::GangTemplate& tmpl, uint64_t security_version,
                        bool resale_allowed) {
  using R = Result<Agent>;
  Agent agent;
  agent.owner_seed = world.rng.bytes32();

  auto reservation = world.platform->reserve_slot(tmpl.gang_id());
  if (!reservation.ok()) return R::failure("reserve: " + reservation.error());

  enclave::BootParams params;
  params.image_template_hash = tmpl.image_template_hash;
  params.task_description_hash = tmpl.task_hash();
  params.slot_id = reservation.value().slot_id;
  params.owner_seed = agent.owner_seed;
  params.security_version = security_version;
  params.provider.pub = tmpl.model_provider;
  params.provider.credential = world.credential;
  params.policy.resale_confirmation_allowed = resale_allowed;
  params.vendor_root = simroot::sim_vendor_root();
  params.clock = logical_clock(world.clock_state);
  agent.enclave_ = std::make_unique<enclave::Enclave>(
      enclave::Enclave::boot(std::move(params), Rng::seeded(world.rng.next_u64())));

  auto cert = world.platform->register_member(tmpl.gang_id(), reservation.value().slot_id,
                                              agent.enclave_->attest(reservation.value().nonce));
  if (!cert.ok()) return R::failure("register: " + cert.error());
  agent.cert = cert.value();
  return agent;
}

std::string post_process(const Bytes& response) {
  // Response shape R:<hex16>:<payload>; the cleaned payload follows the
  // second colon.
  std::string text = to_string(ByteView(response));
  size_t first = text.find(':');
  if (first == std::string::npos) return "";
  size_t second = text.find(':', first + 1);
  if (second == std::string::npos) return "";
  return text.substr(second + 1);
}

size_t column_count(const std::string& row) {
  return static_cast<size_t>(std::count(row.begin(), row.end(), ',')) + 1;
}

}  // namespace

ScenarioReport scenario_cleaning(uint64_t seed, const CleaningOptions& options) {
  ScenarioReport report;
  report.name = "cleaning";
  Recorder rec{report};

  World world(seed, options.journal_path, "mock-cleaner-1");
  market::Platform& platform = *world.platform;

  // 1: founder publishes the gang template (raw table, prompt template, policy).
  gang::GangTemplate tmpl;
  tmpl.task_description =
      "Clean the bundled 20-row customer table into NAME,CITY,QTY form. "
      "Prompt template: \"clean: <row>\". Full prompt disclosure is allowed.";
  tmpl.image_template_hash = crypto::digest(DomainTag::Field, to_bytes("image:cleaning:v1"));
  tmpl.model_provider = world.provider->public_config();
  tmpl.trade_policy.full_prompt_disclosure = true;
  tmpl.trade_policy.resale_allowed = false;
  tmpl.code_reference = "gangs/cleaning-v1";
  tmpl.min_security_version = 1;
  auto gang_id = platform.create_gang(tmpl);
  rec.check("gang published", gang_id.ok(), gang_id.ok() ? "" : gang_id.error());
  if (!gang_id.ok()) return report;

  // 2: seller joins the gang.
  auto seller = join_gang(world, tmpl, 1, tmpl.trade_policy.resale_allowed);
  rec.check("seller registered", seller.ok(), seller.ok() ? "" : seller.error());
  if (!seller.ok()) return report;
  enclave::Enclave& seller_enclave = *seller.value().enclave_;

  // 3-8: clean every row through the certified proxy and post-process.
  std::vector<std::string> cleaned_rows;
  bool calls_ok = true;
  bool validation_ok = true;
  for (const std::string& row : toy_dataset()) {
    Bytes prompt = to_bytes("clean: " + row);
    auto response = seller_enclave.proxy_call(*world.provider, ByteView(prompt));
    if (!response.ok()) {
      calls_ok = false;
      break;
    }
    std::string cleaned = post_process(response.value());
    if (column_count(cleaned) != 3) validation_ok = false;
    cleaned_rows.push_back(std::move(cleaned));
  }
  rec.check("20 certified cleaning calls", calls_ok && seller_enclave.log().size() == 20);
  rec.check("deterministic post-processing validation", validation_ok);

  std::string d_clean;
  for (const std::string& row : cleaned_rows) d_clean += row + "\n";

  // Full-disclosure artifact with the aggregated output attached (uncertified).
  std::vector<uint64_t> selection(20);
  for (uint64_t i = 0; i < 20; ++i) selection[i] = i;
  auto bundle = seller_enclave.build_artifact(selection, ledger::open_all(), to_bytes(d_clean));
  rec.check("artifact built", bundle.ok(), bundle.ok() ? "" : bundle.error());
  if (!bundle.ok()) return report;
  Bytes plain_container = ledger::serialize_bundle(bundle.value());

  delivery::Key key = delivery::make_key(world.rng);
  Bytes delivered = delivery::encrypt(key, ByteView(plain_container), world.rng);
  crypto::Digest delivered_hash = ledger::artifact_hash(ByteView(delivered));

  // Advertisement: same selection, prompts in plaintext, everything else hidden.
  ledger::DisclosurePolicy ad_policy = ledger::hide_all();
  ad_policy[ledger::kPrompt] = ledger::FieldDisclosure::Open;
  auto ad = seller_enclave.build_artifact(selection, ad_policy);
  rec.check("advertisement built", ad.ok());
  if (!ad.ok()) return report;

  // 9: seller posts the listing.
  market::ListingDraft draft;
  draft.seller_cert = seller.value().cert;
  draft.price = 30;
  draft.metadata = make_metadata(seller_enclave.log(), ledger::serialize_bundle(ad.value()));
  draft.resale_allowed = false;
  draft.seller_endpoint = "agent://seller-0";
  draft.encrypted_artifact_hash = delivered_hash;
  auto listing = platform.post_listing(draft);
  rec.check("listing posted", listing.ok(), listing.ok() ? "" : listing.error());
  if (!listing.ok()) return report;

  // 10: buyer locks payment.
  KeyPair buyer = KeyPair::from_rng(world.rng);
  platform.open_account(buyer.public_id());
  platform.deposit(buyer.public_id(), 100);
  Bytes lock_auth = market::lock_payload(listing.value(), 30, "buy-1");
  auto trade = platform.lock_funds(listing.value(), buyer.public_id(), 30, "buy-1",
                                   buyer.sign(DomainTag::Account, ByteView(lock_auth)));
  rec.check("escrow locked", trade.ok() && platform.balance_of(buyer.public_id()).value() == 70);
  if (!trade.ok()) return report;

  // Seller hands the encrypted artifact and the key directly to the buyer.
  Bytes received = delivered;
  if (options.corrupt_delivery) received[received.size() / 2] ^= 0x01;

  auto decrypted = delivery::decrypt(key, ByteView(received));
  if (options.corrupt_delivery) {
    rec.check("corrupted delivery detected by buyer", !decrypted.ok());
    auto refused = seller_enclave.issue_receipt(trade.value(), buyer.public_id(),
                                                ByteView(received), key);
    rec.check("receipt refused for corrupted delivery", !refused.ok());
    Status disputed = platform.dispute(trade.value(), buyer.public_id());
    Status refunded = platform.resolve(trade.value(), false,
                                       platform.sign_resolution(trade.value(), false));
    rec.check("escrow refunded after dispute",
              disputed.ok() && refunded.ok() &&
                  platform.balance_of(buyer.public_id()).value() == 100);
    report.seller_final_root = seller_enclave.log().root().root.hex();
    return report;
  }

  ledger::GenesisInputs genesis{
      enclave::gang_config_hash(seller.value().cert.measurement_value, tmpl.model_provider),
      seller.value().cert.agent_public};
  ledger::VerificationReport verification = ledger::verify_artifact_bytes(
      ByteView(decrypted.value()), draft.metadata.claimed_root, genesis);
  rec.check("buyer verifies the delivered artifact", verification.ok());

  // Buyer recomputes the deterministic post-processing from opened responses.
  auto received_bundle = ledger::parse_bundle(ByteView(decrypted.value()));
  bool recomputed_ok = received_bundle.has_value();
  std::string recomputed;
  if (received_bundle) {
    for (const ledger::DisclosedInteraction& di : received_bundle->artifact.interactions) {
      auto response = ledger::opened_bytes(di.fields[ledger::kResponse]);
      if (!response) {
        recomputed_ok = false;
        break;
      }
      recomputed += post_process(*response) + "\n";
    }
  }
  rec.check("buyer reproduces the cleaned output from the certified trace",
            recomputed_ok && recomputed == d_clean);
  rec.check("attachment hash matches the delivered output",
            received_bundle && received_bundle->artifact.attachment_hash &&
                *received_bundle->artifact.attachment_hash ==
                    crypto::digest(DomainTag::Field, to_bytes(d_clean)));

  // 10 continued: receipt-gated settlement.
  auto receipt = seller_enclave.issue_receipt(trade.value(), buyer.public_id(),
                                              ByteView(delivered), key);
  rec.check("enclave issues the delivery receipt", receipt.ok(),
            receipt.ok() ? "" : receipt.error());
  if (!receipt.ok()) return report;
  auto stage = platform.submit_receipt(trade.value(), receipt.value().receipt,
                                       receipt.value().token);
  rec.check("escrow settled against the receipt",
            stage.ok() && stage.value() == market::TradeStage::Settled &&
                platform.balance_of(seller.value().cert.agent_public).ok() &&
                platform.balance_of(seller.value().cert.agent_public).value() == 30);

  // 11: buyer reuses D_clean (no re-run) and reviews the trade.
  Status redeemed = platform.redeem_token(receipt.value().token);
  Bytes review_auth = market::review_payload(seller.value().cert.agent_public, trade.value(), 5,
                                             "clean table, verified");
  Status reviewed = platform.submit_review(seller.value().cert.agent_public, trade.value(),
                                           buyer.public_id(), 5, "clean table, verified",
                                           buyer.sign(DomainTag::Review, ByteView(review_auth)));
  market::ReputationScore score = platform.reputation(seller.value().cert.agent_public);
  rec.check("token redeemed and review recorded", redeemed.ok() && reviewed.ok());
  rec.check("seller reputation present", score.score.has_value() && *score.score == 1.0);

  if (options.second_buyer) {
    // Co-funding: a second listing of the same artifact settles independently.
    draft.metadata.advertisement = ledger::serialize_bundle(ad.value());
    auto listing2 = platform.post_listing(draft);
    KeyPair buyer2 = KeyPair::from_rng(world.rng);
    platform.open_account(buyer2.public_id());
    platform.deposit(buyer2.public_id(), 50);
    Bytes lock2 = market::lock_payload(listing2.value(), 30, "buy-2");
    auto trade2 = platform.lock_funds(listing2.value(), buyer2.public_id(), 30, "buy-2",
                                      buyer2.sign(DomainTag::Account, ByteView(lock2)));
    auto receipt2 = seller_enclave.issue_receipt(trade2.value(), buyer2.public_id(),
                                                 ByteView(delivered), key);
    auto stage2 = receipt2.ok()
                      ? platform.submit_receipt(trade2.value(), receipt2.value().receipt,
                                                receipt2.value().token)
                      : Result<market::TradeStage>::failure(receipt2.error());
    rec.check("second co-funded listing settles",
              stage2.ok() && stage2.value() == market::TradeStage::Settled);
  }

  report.seller_final_root = seller_enclave.log().root().root.hex();
  return report;
}

ScenarioReport scenario_exploration(uint64_t seed) {
  ScenarioReport report;
  report.name = "exploration";
  Recorder rec{report};

  World world(seed, "", "mock-explorer-1");
  market::Platform& platform = *world.platform;

  gang::GangTemplate tmpl;
  tmpl.task_description =
      "Open-ended ad-creative exploration for the spring campaign; prompts may "
      "be disclosed, responses stay private.";
  tmpl.image_template_hash = crypto::digest(DomainTag::Field, to_bytes("image:explore:v1"));
  tmpl.model_provider = world.provider->public_config();
  tmpl.trade_policy.full_prompt_disclosure = false;
  tmpl.trade_policy.resale_allowed = false;
  tmpl.code_reference = "gangs/exploration-v1";
  tmpl.min_security_version = 1;
  auto gang_id = platform.create_gang(tmpl);
  rec.check("gang published", gang_id.ok());
  if (!gang_id.ok()) return report;

  auto seller = join_gang(world, tmpl, 1, tmpl.trade_policy.resale_allowed);
  rec.check("seller registered", seller.ok(), seller.ok() ? "" : seller.error());
  if (!seller.ok()) return report;
  enclave::Enclave& seller_enclave = *seller.value().enclave_;

  // 50 exploration calls.
  static const char* kAngles[] = {"urgency", "novelty", "social proof", "price anchor",
                                  "curiosity"};
  bool calls_ok = true;
  for (int i = 0; i < 50 && calls_ok; ++i) {
    std::string prompt = "explore: angle " + std::string(kAngles[i % 5]) + " variant " +
                         std::to_string(world.rng.below(1000));
    calls_ok = seller_enclave.proxy_call(*world.provider, ByteView(to_bytes(prompt))).ok();
  }
  rec.check("50 exploration calls certified", calls_ok && seller_enclave.log().size() == 50);

  // Periodic anchoring on the public bulletin.
  auto anchor = seller_enclave.sign_anchor(50, *world.clock_state);
  auto anchored = anchor.ok() ? platform.record_anchor(anchor.value())
                              : Result<uint64_t>::failure(anchor.error());
  rec.check("anchor recorded on the bulletin", anchored.ok());

  // Non-contiguous selection {2, 7, ..., 47}: prompts opened, responses hidden.
  std::vector<uint64_t> selection;
  for (uint64_t i = 2; i < 50; i += 5) selection.push_back(i);
  ledger::DisclosurePolicy policy = ledger::open_all();
  policy[ledger::kResponse] = ledger::FieldDisclosure::Hide;
  auto bundle = seller_enclave.build_artifact(selection, policy);
  rec.check("selective artifact built (10 of 50, responses hidden)",
            bundle.ok() && selection.size() == 10);
  if (!bundle.ok()) return report;
  Bytes plain_container = ledger::serialize_bundle(bundle.value());

  delivery::Key key = delivery::make_key(world.rng);
  Bytes delivered = delivery::encrypt(key, ByteView(plain_container), world.rng);

  // Advertisement discloses two prompt fragments only.
  ledger::DisclosurePolicy ad_policy = ledger::hide_all();
  ad_policy[ledger::kPrompt] = ledger::FieldDisclosure::Open;
  auto ad = seller_enclave.build_artifact({2, 7}, ad_policy);

  market::ListingDraft draft;
  draft.seller_cert = seller.value().cert;
  draft.price = 50;
  draft.metadata = make_metadata(seller_enclave.log(), ledger::serialize_bundle(ad.value()));
  draft.resale_allowed = false;
  draft.seller_endpoint = "agent://explorer-0";
  draft.encrypted_artifact_hash = ledger::artifact_hash(ByteView(delivered));
  auto listing = platform.post_listing(draft);
  rec.check("listing posted", listing.ok(), listing.ok() ? "" : listing.error());
  if (!listing.ok()) return report;

  KeyPair buyer = KeyPair::from_rng(world.rng);
  platform.open_account(buyer.public_id());
  platform.deposit(buyer.public_id(), 80);
  Bytes lock_auth = market::lock_payload(listing.value(), 50, "explore-1");
  auto trade = platform.lock_funds(listing.value(), buyer.public_id(), 50, "explore-1",
                                   buyer.sign(DomainTag::Account, ByteView(lock_auth)));
  rec.check("escrow locked", trade.ok());
  if (!trade.ok()) return report;

  auto decrypted = delivery::decrypt(key, ByteView(delivered));
  ledger::GenesisInputs genesis{
      enclave::gang_config_hash(seller.value().cert.measurement_value, tmpl.model_provider),
      seller.value().cert.agent_public};
  ledger::VerificationReport verification = ledger::verify_artifact_bytes(
      ByteView(decrypted.value()), draft.metadata.claimed_root, genesis);
  rec.check("buyer verifies the selective disclosure", verification.ok());

  // Hiding property: no 9-byte window of any hidden response may appear in
  // the artifact bytes or the verification report.
  bool leak = false;
  Bytes report_bytes = to_bytes(verification.to_string());
  for (uint64_t idx : selection) {
    const Bytes& hidden = seller_enclave.log().record(idx).response;
    for (size_t off = 0; off + 9 <= hidden.size() && !leak; ++off) {
      ByteView window(hidden.data() + off, 9);
      leak = contains(ByteView(plain_container), window) ||
             contains(ByteView(report_bytes), window);
    }
    if (leak) break;
  }
  rec.check("hidden responses do not leak into proof or report", !leak);

  auto receipt = seller_enclave.issue_receipt(trade.value(), buyer.public_id(),
                                              ByteView(delivered), key);
  auto stage = receipt.ok() ? platform.submit_receipt(trade.value(), receipt.value().receipt,
                                                      receipt.value().token)
                            : Result<market::TradeStage>::failure(receipt.error());
  rec.check("escrow settled against the receipt",
            stage.ok() && stage.value() == market::TradeStage::Settled);

  // Resale confirmation is refused for third parties under the gang policy.
  KeyPair third_party = KeyPair::from_rng(world.rng);
  auto confirm_buyer = seller_enclave.confirm_artifact(draft.encrypted_artifact_hash,
                                                       buyer.public_id());
  auto confirm_third = seller_enclave.confirm_artifact(draft.encrypted_artifact_hash,
                                                       third_party.public_id());
  rec.check("completeness confirmation for the original buyer", confirm_buyer.ok());
  rec.check("resale confirmation refused for third parties", !confirm_third.ok());

  // Inheritance into an updated agent image.
  gang::GangTemplate tmpl2 = tmpl;
  tmpl2.image_template_hash = crypto::digest(DomainTag::Field, to_bytes("image:explore:v2"));
  tmpl2.code_reference = "gangs/exploration-v2";
  auto gang2 = platform.create_gang(tmpl2);
  auto successor = join_gang(world, tmpl2, 1, false);
  rec.check("successor registered in the updated gang", gang2.ok() && successor.ok());
  if (!successor.ok()) return report;
  enclave::Enclave& successor_enclave = *successor.value().enclave_;

  auto record = seller_enclave.authorize_inheritance(seller.value().owner_seed,
                                                     successor_enclave.agent_public());
  Status accepted = record.ok() ? successor_enclave.accept_inheritance(record.value())
                                : Status::failure(record.error());
  rec.check("inheritance authorized by the owner key", record.ok() && accepted.ok());
  if (!record.ok()) return report;

  bool successor_calls = true;
  for (int i = 0; i < 5 && successor_calls; ++i) {
    std::string prompt = "explore: continuation " + std::to_string(i);
    successor_calls =
        successor_enclave.proxy_call(*world.provider, ByteView(to_bytes(prompt))).ok();
  }
  rec.check("successor accumulates its own certified memory", successor_calls);

  market::TraceManifest manifest;
  manifest.owner = successor_enclave.agent_public();
  market::TraceEntry inherited;
  inherited.kind = market::TraceEntry::Kind::Inherited;
  inherited.inheritance = record.value();
  manifest.entries.push_back(inherited);
  market::TraceEntry self;
  self.kind = market::TraceEntry::Kind::SelfProduced;
  self.range_from = 0;
  self.range_to = successor_enclave.log().size();
  manifest.entries.push_back(self);

  market::LineageReport lineage =
      platform.verify_trace(manifest, successor_enclave.log().root());
  rec.check("trace manifest accepted after one inheritance step",
            lineage.accepted && lineage.depth == 2);

  report.seller_final_root = seller_enclave.log().root().root.hex();
  report.successor_final_root = successor_enclave.log().root().root.hex();
  return report;
}

}  // namespace memtrade::harness
