#include "memtrade/gang.hpp"

namespace memtrade::gang {

using canon::Value;
using crypto::Digest;
using crypto::DomainTag;

canon::Value GangTemplate::canonical_fields() const {
  std::vector<Value> logging;
  for (FieldLogging f : logging_policy.fields) {
    logging.push_back(Value::u64(static_cast<uint64_t>(f)));
  }
  return Value::record({
      Value::bytes(task_description),
      Value::bytes(image_template_hash.view()),
      enclave::provider_public_value(model_provider),
      Value::record({Value::list(std::move(logging)),
                     Value::u64(logging_policy.record_token_counts ? 1 : 0),
                     Value::u64(logging_policy.record_timestamps ? 1 : 0)}),
      Value::record({Value::u64(trade_policy.resale_allowed ? 1 : 0),
                     Value::u64(trade_policy.full_prompt_disclosure ? 1 : 0),
                     Value::u64(static_cast<uint64_t>(trade_policy.settlement))}),
      Value::bytes(code_reference),
      Value::u64(min_security_version),
  });
}

crypto::Digest GangTemplate::gang_id() const {
  return crypto::digest(DomainTag::Cert, canonical_fields().encode());
}

crypto::Digest GangTemplate::task_hash() const {
  return crypto::digest(DomainTag::Field, to_bytes(task_description));
}

std::optional<GangTemplate> template_from_value(const Value& v) {
  if (!v.is_record() || v.items().size() != 7) return std::nullopt;
  const auto& f = v.items();
  if (!f[0].is_bytes() || !f[1].is_bytes() || !f[2].is_record() || !f[3].is_record() ||
      !f[4].is_record() || !f[5].is_bytes() || !f[6].is_u64()) {
    return std::nullopt;
  }

  GangTemplate t;
  t.task_description = to_string(ByteView(f[0].as_bytes()));
  auto image = Digest::from_bytes(ByteView(f[1].as_bytes()));
  if (!image) return std::nullopt;
  t.image_template_hash = *image;

  const auto& prov = f[2].items();
  if (prov.size() != 3 || !prov[0].is_bytes() || !prov[1].is_bytes() || !prov[2].is_bytes()) {
    return std::nullopt;
  }
  auto ppub = crypto::PublicIdentity::from_bytes(ByteView(prov[1].as_bytes()));
  if (!ppub) return std::nullopt;
  t.model_provider.endpoint = to_string(ByteView(prov[0].as_bytes()));
  t.model_provider.provider_public = *ppub;
  t.model_provider.model_name = to_string(ByteView(prov[2].as_bytes()));

  const auto& lp = f[3].items();
  if (lp.size() != 3 || !lp[0].is_list() || lp[0].items().size() != ledger::kFieldCount ||
      !lp[1].is_u64() || !lp[2].is_u64()) {
    return std::nullopt;
  }
  for (size_t i = 0; i < ledger::kFieldCount; ++i) {
    if (!lp[0].items()[i].is_u64() || lp[0].items()[i].as_u64() > 1) return std::nullopt;
    t.logging_policy.fields[i] = static_cast<FieldLogging>(lp[0].items()[i].as_u64());
  }
  t.logging_policy.record_token_counts = lp[1].as_u64() == 1;
  t.logging_policy.record_timestamps = lp[2].as_u64() == 1;

  const auto& tp = f[4].items();
  if (tp.size() != 3 || !tp[0].is_u64() || !tp[1].is_u64() || !tp[2].is_u64() ||
      tp[2].as_u64() > 1) {
    return std::nullopt;
  }
  t.trade_policy.resale_allowed = tp[0].as_u64() == 1;
  t.trade_policy.full_prompt_disclosure = tp[1].as_u64() == 1;
  t.trade_policy.settlement = static_cast<SettlementMode>(tp[2].as_u64());

  t.code_reference = to_string(ByteView(f[5].as_bytes()));
  t.min_security_version = f[6].as_u64();
  return t;
}

Bytes certificate_payload(const MembershipCertificate& cert) {
  return Value::record({
             Value::bytes(cert.gang_id.view()),
             Value::u64(cert.slot_id),
             Value::bytes(cert.agent_public.view()),
             Value::bytes(cert.measurement_value.view()),
             Value::u64(cert.security_version),
             Value::u64(cert.issued_at_ms),
         }).encode();
}

bool verify_certificate(const MembershipCertificate& cert, const crypto::PublicIdentity& platform) {
  return crypto::verify(platform, DomainTag::Cert, ByteView(certificate_payload(cert)),
                        cert.platform_signature);
}

GangDirectory::GangDirectory(GangTemplate tmpl) : template_(std::move(tmpl)) {}

void GangDirectory::apply_reserve(uint64_t slot_id, const std::array<uint8_t, 16>& nonce,
                                  bool reregistration) {
  sessions_[slot_id] = Session{nonce, false, reregistration};
  if (!reregistration && slot_id >= next_slot_) next_slot_ = slot_id + 1;
}

Status GangDirectory::validate_registration(uint64_t slot_id,
                                            const enclave::AttestationReport& report,
                                            const crypto::PublicIdentity& vendor_root) const {
  auto session = sessions_.find(slot_id);
  if (session == sessions_.end()) return Status::failure("no open registration session for slot");
  if (session->second.consumed) return Status::failure("stale nonce: session already consumed");
  if (report.nonce != session->second.nonce) return Status::failure("stale nonce");

  if (!enclave::verify_attestation(report, vendor_root)) {
    return Status::failure("attestation report does not verify under the vendor root");
  }
  if (report.measurement.image_template_hash != template_.image_template_hash) {
    return Status::failure("measurement mismatch: wrong image template hash");
  }
  if (report.measurement.task_description_hash != template_.task_hash()) {
    return Status::failure("measurement mismatch: wrong task description hash");
  }
  if (report.measurement.slot_id != slot_id) {
    return Status::failure("measurement mismatch: wrong slot id");
  }
  if (report.security_version < template_.min_security_version) {
    return Status::failure("security version below gang minimum");
  }

  auto history = members_.find(slot_id);
  bool slot_taken = history != members_.end() && !history->second.empty();
  if (session->second.reregistration) {
    if (!slot_taken) return Status::failure("re-registration for an unregistered slot");
    const MemberRecord& current = history->second.back();
    if (report.security_version <= current.certificate.security_version) {
      return Status::failure("re-registration must increase the security version");
    }
    if (report.measurement.owner_seed_hash != current.measurement.owner_seed_hash) {
      return Status::failure("re-registration owner mismatch");
    }
  } else if (slot_taken) {
    return Status::failure("slot already registered");
  }
  return Status();
}

MembershipCertificate GangDirectory::apply_registration(uint64_t slot_id,
                                                        const enclave::AttestationReport& report,
                                                        uint64_t issued_at_ms,
                                                        const crypto::KeyPair& platform_key) {
  sessions_[slot_id].consumed = true;

  MembershipCertificate cert;
  cert.gang_id = template_.gang_id();
  cert.slot_id = slot_id;
  cert.agent_public = report.agent_public;
  cert.measurement_value = report.measurement.value;
  cert.security_version = report.security_version;
  cert.issued_at_ms = issued_at_ms;
  cert.platform_signature =
      platform_key.sign(DomainTag::Cert, ByteView(certificate_payload(cert)));

  auto& history = members_[slot_id];
  if (!history.empty()) history.back().status = MemberStatus::Superseded;
  history.push_back(MemberRecord{slot_id, report.measurement, cert, MemberStatus::Active});
  ++document_version_;
  return cert;
}

const std::vector<MemberRecord>& GangDirectory::slot_history(uint64_t slot_id) const {
  static const std::vector<MemberRecord> kEmpty;
  auto it = members_.find(slot_id);
  return it == members_.end() ? kEmpty : it->second;
}

std::vector<MemberRecord> GangDirectory::active_members() const {
  std::vector<MemberRecord> out;
  for (const auto& [slot, history] : members_) {
    if (!history.empty() && history.back().status == MemberStatus::Active) {
      out.push_back(history.back());
    }
  }
  return out;
}

GangDirectory::CertStatus GangDirectory::certificate_status(
    const MembershipCertificate& cert) const {
  for (const MemberRecord& record : slot_history(cert.slot_id)) {
    if (record.certificate == cert) {
      return record.status == MemberStatus::Active ? CertStatus::Active : CertStatus::Superseded;
    }
  }
  return CertStatus::Unknown;
}

Bytes GangDirectory::member_list_document(const crypto::KeyPair& platform_key) const {
  std::vector<Value> entries;
  for (const auto& [slot, history] : members_) {
    for (const MemberRecord& record : history) {
      entries.push_back(Value::record({
          Value::u64(record.slot_id),
          Value::bytes(record.certificate.agent_public.view()),
          Value::bytes(record.certificate.measurement_value.view()),
          Value::u64(record.certificate.security_version),
          Value::u64(static_cast<uint64_t>(record.status)),
          Value::u64(record.certificate.issued_at_ms),
      }));
    }
  }
  Bytes body = Value::record({
                   Value::bytes(template_.gang_id().view()),
                   Value::u64(document_version_),
                   Value::list(std::move(entries)),
               }).encode();
  crypto::Signature sig = platform_key.sign(DomainTag::MemberList, ByteView(body));
  Bytes payload = Value::record({Value::bytes(ByteView(body)), Value::bytes(sig.view())}).encode();
  return seal_container(kMemberListMagic, kContainerVersion, payload);
}

bool verify_member_list_document(ByteView document, const crypto::PublicIdentity& platform) {
  auto payload = open_container(kMemberListMagic, kContainerVersion, document);
  if (!payload) return false;
  auto value = Value::decode(*payload);
  if (!value || !value->is_record() || value->items().size() != 2 ||
      !value->items()[0].is_bytes() || !value->items()[1].is_bytes()) {
    return false;
  }
  auto sig = crypto::Signature::from_bytes(ByteView(value->items()[1].as_bytes()));
  if (!sig) return false;
  return crypto::verify(platform, DomainTag::MemberList, ByteView(value->items()[0].as_bytes()),
                        *sig);
}

}  // namespace memtrade::gang
