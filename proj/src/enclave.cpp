#include "memtrade/enclave.hpp"

#include <chrono>

namespace memtrade::enclave {

using canon::Value;
using crypto::Digest;
using crypto::DomainTag;
using crypto::PublicIdentity;

namespace {

uint64_t wall_clock_ms() {
  return static_cast<uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                   std::chrono::system_clock::now().time_since_epoch())
                                   .count());
}

Value bytes16_value(const std::array<uint8_t, 16>& b) {
  return Value::bytes(ByteView(b.data(), b.size()));
}

}  // namespace

Measurement Measurement::compute(const Digest& image_template_hash,
                                 const Digest& task_description_hash, uint64_t slot_id,
                                 const Digest& owner_seed_hash) {
  Measurement m;
  m.image_template_hash = image_template_hash;
  m.task_description_hash = task_description_hash;
  m.slot_id = slot_id;
  m.owner_seed_hash = owner_seed_hash;
  Bytes payload = Value::record({
                      Value::bytes(image_template_hash.view()),
                      Value::bytes(task_description_hash.view()),
                      Value::u64(slot_id),
                      Value::bytes(owner_seed_hash.view()),
                  }).encode();
  m.value = crypto::digest(DomainTag::Cert, payload);
  return m;
}

Bytes attestation_payload(const Digest& measurement_value, uint64_t security_version,
                          const PublicIdentity& agent_public,
                          const std::array<uint8_t, 16>& nonce) {
  return Value::record({
             Value::bytes(measurement_value.view()),
             Value::u64(security_version),
             Value::bytes(agent_public.view()),
             bytes16_value(nonce),
         }).encode();
}

bool verify_attestation(const AttestationReport& report, const PublicIdentity& vendor_root) {
  Measurement recomputed = Measurement::compute(
      report.measurement.image_template_hash, report.measurement.task_description_hash,
      report.measurement.slot_id, report.measurement.owner_seed_hash);
  if (recomputed.value != report.measurement.value) return false;
  Bytes payload = attestation_payload(report.measurement.value, report.security_version,
                                      report.agent_public, report.nonce);
  return crypto::verify(vendor_root, DomainTag::Cert, ByteView(payload), report.vendor_signature);
}

Value provider_public_value(const ProviderPublic& p) {
  return Value::record({
      Value::bytes(p.endpoint),
      Value::bytes(p.provider_public.view()),
      Value::bytes(p.model_name),
  });
}

Digest gang_config_hash(const Digest& measurement_value, const ProviderPublic& p) {
  Bytes payload =
      Value::record({Value::bytes(measurement_value.view()), provider_public_value(p)}).encode();
  return crypto::digest(DomainTag::Cert, payload);
}

Bytes hello_payload(const std::array<uint8_t, 16>& nonce, const std::string& model_name) {
  return Value::record({bytes16_value(nonce), Value::bytes(model_name)}).encode();
}

Bytes receipt_payload(uint64_t trade_id, const PublicIdentity& buyer, const Digest& artifact_hash,
                      const ledger::AnchoredRoot& root) {
  return Value::record({
             Value::u64(trade_id),
             Value::bytes(buyer.view()),
             Value::bytes(artifact_hash.view()),
             Value::u64(root.length),
             Value::bytes(root.root.view()),
         }).encode();
}

bool verify_receipt(const DeliveryReceipt& receipt, const PublicIdentity& seller) {
  Bytes payload =
      receipt_payload(receipt.trade_id, receipt.buyer, receipt.artifact_hash, receipt.referenced_root);
  return crypto::verify(seller, DomainTag::Receipt, ByteView(payload), receipt.enclave_signature);
}

Bytes token_payload(uint64_t trade_id, const PublicIdentity& buyer) {
  return Value::record({Value::u64(trade_id), Value::bytes(buyer.view())}).encode();
}

bool verify_token(const PurchaseToken& token) {
  Bytes payload = token_payload(token.trade_id, token.buyer);
  return crypto::verify(token.seller, DomainTag::Token, ByteView(payload), token.seller_signature);
}

Bytes inheritance_payload(const InheritanceRecord& record) {
  return Value::record({
             Value::bytes(record.predecessor.view()),
             Value::bytes(record.successor.view()),
             Value::u64(record.root_at_transfer.length),
             Value::bytes(record.root_at_transfer.root.view()),
             Value::bytes(record.owner_public.view()),
         }).encode();
}

bool verify_inheritance(const InheritanceRecord& record) {
  Bytes payload = inheritance_payload(record);
  return crypto::verify(record.owner_public, DomainTag::Inherit, ByteView(payload),
                        record.owner_authorization) &&
         crypto::verify(record.predecessor, DomainTag::Inherit, ByteView(payload),
                        record.enclave_signature);
}

Bytes confirmation_payload(const Digest& artifact_hash, const PublicIdentity& requester) {
  return Value::record({Value::bytes(artifact_hash.view()), Value::bytes(requester.view())})
      .encode();
}

bool verify_confirmation(const ResaleConfirmation& confirmation, const PublicIdentity& seller) {
  Bytes payload = confirmation_payload(confirmation.artifact_hash, confirmation.requester);
  return crypto::verify(seller, DomainTag::Confirm, ByteView(payload), confirmation.signature);
}

Enclave::Enclave(BootParams params, Rng rng, crypto::KeyPair agent_key, ledger::Log log)
    : measurement_(Measurement::compute(params.image_template_hash, params.task_description_hash,
                                        params.slot_id,
                                        crypto::digest(DomainTag::Cert,
                                                       ByteView(params.owner_seed.data(),
                                                                params.owner_seed.size())))),
      security_version_(params.security_version),
      agent_key_(std::move(agent_key)),
      provider_(std::move(params.provider)),
      policy_(params.policy),
      vendor_root_(std::move(params.vendor_root)),
      clock_(params.clock ? std::move(params.clock) : Clock(wall_clock_ms)),
      rng_(std::move(rng)),
      log_(std::move(log)) {}

Enclave Enclave::boot(BootParams params, Rng rng) {
  crypto::KeyPair agent_key = crypto::KeyPair::from_rng(rng);
  Digest owner_seed_hash = crypto::digest(
      DomainTag::Cert, ByteView(params.owner_seed.data(), params.owner_seed.size()));
  Measurement m = Measurement::compute(params.image_template_hash, params.task_description_hash,
                                       params.slot_id, owner_seed_hash);
  ledger::GenesisInputs gi{gang_config_hash(m.value, params.provider.pub), agent_key.public_id()};
  return Enclave(std::move(params), std::move(rng), std::move(agent_key), ledger::Log(gi));
}

uint64_t Enclave::now_ms() {
  uint64_t t = clock_();
  if (log_.size() > 0) {
    // Keeps the ledger's non-decreasing timestamp invariant even if the
    // host clock steps backwards.
    t = std::max(t, log_.record(log_.size() - 1).timestamp_ms);
  }
  return t;
}

AttestationReport Enclave::attest(const std::array<uint8_t, 16>& nonce) const {
  AttestationReport report;
  report.measurement = measurement_;
  report.security_version = security_version_;
  report.agent_public = agent_key_.public_id();
  report.nonce = nonce;
  Bytes payload =
      attestation_payload(measurement_.value, security_version_, report.agent_public, nonce);
  report.vendor_signature = vendor_root_.sign(DomainTag::Cert, ByteView(payload));
  return report;
}

Result<Bytes> Enclave::proxy_call(ModelProvider& provider, ByteView prompt) {
  std::array<uint8_t, 16> nonce = rng_.bytes16();
  ProviderHello hello = provider.hello(nonce);
  Bytes hello_bytes = hello_payload(nonce, hello.model_name);
  bool identity_ok = hello.provider_public == provider_.pub.provider_public &&
                     hello.model_name == provider_.pub.model_name &&
                     crypto::verify(provider_.pub.provider_public, DomainTag::Hello,
                                    ByteView(hello_bytes), hello.signature);
  if (!identity_ok) {
    return Result<Bytes>::failure("provider identity mismatch: call refused");
  }

  Result<ProviderReply> reply = provider.call(ByteView(provider_.credential), prompt);
  if (!reply.ok()) {
    return Result<Bytes>::failure("transport failure (retriable): " + reply.error());
  }

  ByteView mask(kRedactionMask.data(), kRedactionMask.size());
  Bytes logged_prompt = provider_.credential.empty()
                            ? Bytes(prompt.begin(), prompt.end())
                            : replace_all(prompt, ByteView(provider_.credential), mask);
  Bytes logged_response = provider_.credential.empty()
                              ? reply.value().response
                              : replace_all(ByteView(reply.value().response),
                                            ByteView(provider_.credential), mask);

  ledger::InteractionRecord rec = log_.make_record(
      std::move(logged_prompt), std::move(logged_response), provider_.pub.model_name,
      reply.value().token_in, reply.value().token_out, now_ms(), rng_);
  Result<ledger::AnchoredRoot> appended = log_.append(std::move(rec));
  if (!appended.ok()) {
    return Result<Bytes>::failure("ledger append failed: " + appended.error());
  }
  return std::move(reply).take().response;
}

Result<ledger::ArtifactBundle> Enclave::build_artifact(std::vector<uint64_t> selection,
                                                       const ledger::DisclosurePolicy& policy,
                                                       std::optional<Bytes> attachment) const {
  return log_.build_artifact(std::move(selection), policy, std::move(attachment));
}

Result<ledger::ArtifactBundle> Enclave::build_artifact(
    std::vector<uint64_t> selection, const std::vector<ledger::DisclosurePolicy>& policies,
    std::optional<Bytes> attachment) const {
  return log_.build_artifact(std::move(selection), policies, std::move(attachment));
}

Result<ReceiptBundle> Enclave::issue_receipt(uint64_t trade_id, const PublicIdentity& buyer,
                                             ByteView delivered_container,
                                             std::optional<delivery::Key> key) {
  using R = Result<ReceiptBundle>;

  Bytes plaintext;
  if (key) {
    Result<Bytes> decrypted = delivery::decrypt(*key, delivered_container);
    if (!decrypted.ok()) return R::failure("delivered container: " + decrypted.error());
    plaintext = std::move(decrypted).take();
  } else {
    plaintext.assign(delivered_container.begin(), delivered_container.end());
  }

  auto bundle = ledger::parse_bundle(ByteView(plaintext));
  if (!bundle) return R::failure("delivered artifact does not parse");

  Result<ledger::AnchoredRoot> local_root = log_.root_at(bundle->artifact.claimed_root.length);
  if (!local_root.ok()) return R::failure("claimed root length exceeds local log");

  ledger::VerificationReport report =
      ledger::verify_artifact(*bundle, local_root.value(), log_.genesis_inputs());
  if (!report.ok()) return R::failure("artifact inconsistent with local log");

  // Opened content must be byte-identical to what this enclave recorded; a
  // compromised runtime cannot certify fabricated memory.
  for (const ledger::DisclosedInteraction& di : bundle->artifact.interactions) {
    const ledger::InteractionRecord& rec = log_.record(di.seq_no);
    for (size_t f = 0; f < ledger::kFieldCount; ++f) {
      const ledger::FieldEntry& fe = di.fields[f];
      if (!fe.opened) continue;
      if (fe.value != ledger::field_value(rec, f).encode() || fe.salt != rec.field_salts[f]) {
        return R::failure("opened field does not match the logged interaction");
      }
    }
  }

  Digest hash = ledger::artifact_hash(delivered_container);

  auto existing = trades_.find(trade_id);
  if (existing != trades_.end()) {
    if (existing->second.buyer != buyer) {
      return R::failure("trade already bound to a different buyer");
    }
    if (existing->second.artifact_hash != hash) {
      return R::failure("trade already bound to a different artifact");
    }
  } else {
    trades_[trade_id] = TradeBinding{buyer, hash};
    receipted_[hash] = trade_id;
  }

  ReceiptBundle out;
  out.receipt.trade_id = trade_id;
  out.receipt.buyer = buyer;
  out.receipt.artifact_hash = hash;
  out.receipt.referenced_root = bundle->artifact.claimed_root;
  Bytes rpayload = receipt_payload(trade_id, buyer, hash, bundle->artifact.claimed_root);
  out.receipt.enclave_signature = agent_key_.sign(DomainTag::Receipt, ByteView(rpayload));

  out.token.seller = agent_key_.public_id();
  out.token.trade_id = trade_id;
  out.token.buyer = buyer;
  Bytes tpayload = token_payload(trade_id, buyer);
  out.token.seller_signature = agent_key_.sign(DomainTag::Token, ByteView(tpayload));
  return out;
}

Result<ResaleConfirmation> Enclave::confirm_artifact(const Digest& artifact_hash,
                                                     const PublicIdentity& requester,
                                                     bool fee_paid) const {
  using R = Result<ResaleConfirmation>;
  auto it = receipted_.find(artifact_hash);
  if (it == receipted_.end()) return R::failure("unknown artifact hash");
  const TradeBinding& binding = trades_.at(it->second);

  bool allowed = requester == binding.buyer ||
                 (policy_.resale_confirmation_allowed && fee_paid);
  if (!allowed) {
    return R::failure(policy_.resale_confirmation_allowed
                          ? "resale confirmation requires the fee record"
                          : "resale confirmation forbidden by gang policy");
  }

  ResaleConfirmation conf;
  conf.artifact_hash = artifact_hash;
  conf.requester = requester;
  Bytes payload = confirmation_payload(artifact_hash, requester);
  conf.signature = agent_key_.sign(DomainTag::Confirm, ByteView(payload));
  return conf;
}

Result<InheritanceRecord> Enclave::authorize_inheritance(const std::array<uint8_t, 32>& owner_seed,
                                                         const PublicIdentity& successor) const {
  using R = Result<InheritanceRecord>;
  Digest seed_hash = crypto::digest(DomainTag::Cert, ByteView(owner_seed.data(), owner_seed.size()));
  if (seed_hash != measurement_.owner_seed_hash) {
    return R::failure("owner seed does not match the measured owner");
  }
  crypto::KeyPair owner_key = crypto::KeyPair::from_seed(owner_seed);

  InheritanceRecord record;
  record.predecessor = agent_key_.public_id();
  record.successor = successor;
  record.root_at_transfer = log_.root();
  record.owner_public = owner_key.public_id();
  Bytes payload = inheritance_payload(record);
  record.owner_authorization = owner_key.sign(DomainTag::Inherit, ByteView(payload));
  record.enclave_signature = agent_key_.sign(DomainTag::Inherit, ByteView(payload));
  return record;
}

Status Enclave::accept_inheritance(const InheritanceRecord& record) {
  if (record.successor != agent_key_.public_id()) {
    return Status::failure("record does not name this agent as successor");
  }
  if (!verify_inheritance(record)) {
    return Status::failure("inheritance record signatures do not verify");
  }
  inherited_.push_back(record);
  return Status();
}

Result<ledger::AnchorCommitment> Enclave::sign_anchor(uint64_t at_length,
                                                      uint64_t wallclock_ms) const {
  Result<ledger::AnchoredRoot> root = log_.root_at(at_length);
  if (!root.ok()) return Result<ledger::AnchorCommitment>::failure(root.error());

  ledger::AnchorCommitment commitment;
  commitment.agent = agent_key_.public_id();
  commitment.root_at = root.value();
  commitment.wallclock_ms = wallclock_ms;
  Bytes payload = ledger::anchor_payload(commitment.agent, commitment.root_at, wallclock_ms);
  commitment.signature = agent_key_.sign(DomainTag::Anchor, ByteView(payload));
  return commitment;
}

Bytes Enclave::serialize_state() const {
  using canon::Value;
  std::vector<Value> trade_items;
  for (const auto& [trade_id, binding] : trades_) {
    trade_items.push_back(Value::record({Value::u64(trade_id), Value::bytes(binding.buyer.view()),
                                         Value::bytes(binding.artifact_hash.view())}));
  }
  std::vector<Value> inherited_items;
  for (const InheritanceRecord& r : inherited_) {
    inherited_items.push_back(Value::record({
        Value::bytes(r.predecessor.view()),
        Value::bytes(r.successor.view()),
        Value::u64(r.root_at_transfer.length),
        Value::bytes(r.root_at_transfer.root.view()),
        Value::bytes(r.owner_public.view()),
        Value::bytes(r.owner_authorization.view()),
        Value::bytes(r.enclave_signature.view()),
    }));
  }

  Value payload = Value::record({
      Value::bytes(measurement_.image_template_hash.view()),
      Value::bytes(measurement_.task_description_hash.view()),
      Value::u64(measurement_.slot_id),
      Value::bytes(measurement_.owner_seed_hash.view()),
      Value::u64(security_version_),
      Value::bytes(ByteView(agent_key_.seed().data(), agent_key_.seed().size())),
      Value::record({Value::bytes(provider_.pub.endpoint),
                     Value::bytes(provider_.pub.provider_public.view()),
                     Value::bytes(provider_.pub.model_name),
                     Value::bytes(ByteView(provider_.credential))}),
      Value::u64(policy_.resale_confirmation_allowed ? 1 : 0),
      Value::bytes(ByteView(log_.serialize())),
      Value::list(std::move(trade_items)),
      Value::list(std::move(inherited_items)),
  });
  return seal_container(kStateMagic, kContainerVersion, payload.encode());
}

Result<Enclave> Enclave::restore_state(ByteView bytes, crypto::KeyPair vendor_root, Clock clock) {
  using R = Result<Enclave>;
  auto payload = open_container(kStateMagic, kContainerVersion, bytes);
  if (!payload) return R::failure("not an enclave state container");
  auto value = canon::Value::decode(*payload);
  if (!value || !value->is_record() || value->items().size() != 11) {
    return R::failure("malformed enclave state");
  }
  const auto& f = value->items();

  auto image = Digest::from_bytes(ByteView(f[0].as_bytes()));
  auto task = Digest::from_bytes(ByteView(f[1].as_bytes()));
  auto owner = Digest::from_bytes(ByteView(f[3].as_bytes()));
  if (!image || !task || !owner || !f[2].is_u64() || !f[4].is_u64() || !f[5].is_bytes() ||
      f[5].as_bytes().size() != 32) {
    return R::failure("malformed enclave state");
  }
  if (!f[6].is_record() || f[6].items().size() != 4 || !f[7].is_u64() || !f[8].is_bytes() ||
      !f[9].is_list() || !f[10].is_list()) {
    return R::failure("malformed enclave state");
  }

  std::array<uint8_t, 32> agent_seed{};
  std::copy(f[5].as_bytes().begin(), f[5].as_bytes().end(), agent_seed.begin());

  ProviderConfig provider;
  const auto& pv = f[6].items();
  auto ppub = PublicIdentity::from_bytes(ByteView(pv[1].as_bytes()));
  if (!pv[0].is_bytes() || !ppub || !pv[2].is_bytes() || !pv[3].is_bytes()) {
    return R::failure("malformed enclave state");
  }
  provider.pub.endpoint = to_string(ByteView(pv[0].as_bytes()));
  provider.pub.provider_public = *ppub;
  provider.pub.model_name = to_string(ByteView(pv[2].as_bytes()));
  provider.credential = pv[3].as_bytes();

  auto log = ledger::Log::restore(ByteView(f[8].as_bytes()));
  if (!log) return R::failure("enclave state ledger does not replay");

  BootParams params;
  params.image_template_hash = *image;
  params.task_description_hash = *task;
  params.slot_id = f[2].as_u64();
  params.security_version = f[4].as_u64();
  params.provider = provider;
  params.policy.resale_confirmation_allowed = f[7].as_u64() == 1;
  params.vendor_root = std::move(vendor_root);
  params.clock = std::move(clock);

  Enclave enclave(std::move(params), Rng::system(), crypto::KeyPair::from_seed(agent_seed),
                  std::move(*log));
  // The measurement embeds the owner seed hash, not the seed; restore it directly.
  enclave.measurement_ =
      Measurement::compute(*image, *task, f[2].as_u64(), *owner);

  // Ledger genesis must be consistent with the restored identity.
  ledger::GenesisInputs expected{
      gang_config_hash(enclave.measurement_.value, enclave.provider_.pub),
      enclave.agent_key_.public_id()};
  if (!(enclave.log_.genesis_inputs() == expected)) {
    return R::failure("enclave state genesis mismatch");
  }

  for (const canon::Value& tv : f[9].items()) {
    if (!tv.is_record() || tv.items().size() != 3 || !tv.items()[0].is_u64()) {
      return R::failure("malformed enclave state");
    }
    auto buyer = PublicIdentity::from_bytes(ByteView(tv.items()[1].as_bytes()));
    auto hash = Digest::from_bytes(ByteView(tv.items()[2].as_bytes()));
    if (!buyer || !hash) return R::failure("malformed enclave state");
    enclave.trades_[tv.items()[0].as_u64()] = TradeBinding{*buyer, *hash};
    enclave.receipted_[*hash] = tv.items()[0].as_u64();
  }
  for (const canon::Value& iv : f[10].items()) {
    if (!iv.is_record() || iv.items().size() != 7) return R::failure("malformed enclave state");
    const auto& r = iv.items();
    auto pred = PublicIdentity::from_bytes(ByteView(r[0].as_bytes()));
    auto succ = PublicIdentity::from_bytes(ByteView(r[1].as_bytes()));
    auto root = Digest::from_bytes(ByteView(r[3].as_bytes()));
    auto opub = PublicIdentity::from_bytes(ByteView(r[4].as_bytes()));
    auto osig = crypto::Signature::from_bytes(ByteView(r[5].as_bytes()));
    auto esig = crypto::Signature::from_bytes(ByteView(r[6].as_bytes()));
    if (!pred || !succ || !r[2].is_u64() || !root || !opub || !osig || !esig) {
      return R::failure("malformed enclave state");
    }
    enclave.inherited_.push_back(InheritanceRecord{
        *pred, *succ, ledger::AnchoredRoot{r[2].as_u64(), *root}, *opub, *osig, *esig});
  }

  return enclave;
}

}  // namespace memtrade::enclave
