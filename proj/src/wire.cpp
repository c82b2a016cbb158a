#include "memtrade/wire.hpp"

namespace memtrade::wire {

namespace {

std::string hex_of(ByteView b) {
  return to_hex(b);
}

json root_json(const ledger::AnchoredRoot& r) {
  return json{{"length", r.length}, {"root", r.root.hex()}};
}

std::string_view logging_name(gang::FieldLogging f) {
  return f == gang::FieldLogging::Plaintext ? "plaintext" : "digest_only";
}

std::string_view settlement_name(gang::SettlementMode m) {
  return m == gang::SettlementMode::PlatformEscrow ? "platform_escrow" : "peer_to_peer";
}

std::string_view window_name(market::AnchorWindow w) {
  switch (w) {
    case market::AnchorWindow::Unaffected: return "unaffected";
    case market::AnchorWindow::PreWindowCredible: return "pre_window_credible";
    case market::AnchorWindow::PostWindow: return "post_window";
  }
  return "unaffected";
}

}  // namespace

json to_json(const crypto::Digest& d) {
  return d.hex();
}

json to_json(const ledger::AnchoredRoot& r) {
  return root_json(r);
}

json to_json(const ledger::GenesisInputs& g) {
  return json{{"gang_config_hash", g.gang_config_hash.hex()}, {"agent", g.agent.hex()}};
}

json to_json(const enclave::Measurement& m) {
  return json{{"image_template_hash", m.image_template_hash.hex()},
              {"task_description_hash", m.task_description_hash.hex()},
              {"slot_id", m.slot_id},
              {"owner_seed_hash", m.owner_seed_hash.hex()},
              {"value", m.value.hex()}};
}

json to_json(const enclave::AttestationReport& r) {
  return json{{"measurement", to_json(r.measurement)},
              {"security_version", r.security_version},
              {"agent_public", r.agent_public.hex()},
              {"nonce", to_base64(ByteView(r.nonce.data(), r.nonce.size()))},
              {"vendor_signature", hex_of(r.vendor_signature.view())}};
}

json to_json(const enclave::ProviderPublic& p) {
  return json{{"endpoint", p.endpoint},
              {"provider_public", p.provider_public.hex()},
              {"model_name", p.model_name}};
}

json to_json(const gang::GangTemplate& t) {
  json fields = json::array();
  for (gang::FieldLogging f : t.logging_policy.fields) fields.push_back(logging_name(f));
  return json{{"gang_id", t.gang_id().hex()},
              {"task_description", t.task_description},
              {"image_template_hash", t.image_template_hash.hex()},
              {"model_provider", to_json(t.model_provider)},
              {"logging_policy",
               {{"fields", fields},
                {"record_token_counts", t.logging_policy.record_token_counts},
                {"record_timestamps", t.logging_policy.record_timestamps}}},
              {"trade_policy",
               {{"resale_allowed", t.trade_policy.resale_allowed},
                {"full_prompt_disclosure", t.trade_policy.full_prompt_disclosure},
                {"settlement", settlement_name(t.trade_policy.settlement)}}},
              {"code_reference", t.code_reference},
              {"min_security_version", t.min_security_version}};
}

json to_json(const gang::MembershipCertificate& c) {
  return json{{"gang_id", c.gang_id.hex()},
              {"slot_id", c.slot_id},
              {"agent_public", c.agent_public.hex()},
              {"measurement_value", c.measurement_value.hex()},
              {"security_version", c.security_version},
              {"issued_at_ms", c.issued_at_ms},
              {"platform_signature", hex_of(c.platform_signature.view())}};
}

json to_json(const gang::MemberRecord& m) {
  return json{{"slot_id", m.slot_id},
              {"certificate", to_json(m.certificate)},
              {"measurement", to_json(m.measurement)},
              {"status", m.status == gang::MemberStatus::Active ? "active" : "superseded"}};
}

json to_json(const enclave::DeliveryReceipt& r) {
  return json{{"trade_id", r.trade_id},
              {"buyer", r.buyer.hex()},
              {"artifact_hash", r.artifact_hash.hex()},
              {"referenced_root", root_json(r.referenced_root)},
              {"enclave_signature", hex_of(r.enclave_signature.view())}};
}

json to_json(const enclave::PurchaseToken& t) {
  return json{{"seller", t.seller.hex()},
              {"trade_id", t.trade_id},
              {"buyer", t.buyer.hex()},
              {"seller_signature", hex_of(t.seller_signature.view())}};
}

json to_json(const enclave::InheritanceRecord& r) {
  return json{{"predecessor", r.predecessor.hex()},
              {"successor", r.successor.hex()},
              {"root_at_transfer", root_json(r.root_at_transfer)},
              {"owner_public", r.owner_public.hex()},
              {"owner_authorization", hex_of(r.owner_authorization.view())},
              {"enclave_signature", hex_of(r.enclave_signature.view())}};
}

json to_json(const market::CertifiedMetadata& m) {
  return json{{"claimed_root", root_json(m.claimed_root)},
              {"interaction_count", m.interaction_count},
              {"total_token_in", m.total_token_in},
              {"total_token_out", m.total_token_out},
              {"first_timestamp_ms", m.first_timestamp_ms},
              {"last_timestamp_ms", m.last_timestamp_ms},
              {"advertisement", to_base64(ByteView(m.advertisement))}};
}

json to_json(const market::ListingDraft& d) {
  return json{{"seller_cert", to_json(d.seller_cert)},
              {"price", d.price},
              {"certified_metadata", to_json(d.metadata)},
              {"resale_allowed", d.resale_allowed},
              {"seller_endpoint", d.seller_endpoint},
              {"encrypted_artifact_hash", d.encrypted_artifact_hash.hex()}};
}

json to_json(const market::TradeListing& l) {
  json j = to_json(l.draft);
  j["listing_id"] = l.listing_id;
  return j;
}

json to_json(const market::Trade& t) {
  json transitions = json::array();
  for (const auto& [stage, at] : t.transitions) {
    transitions.push_back(json{{"stage", market::stage_name(stage)}, {"at_ms", at}});
  }
  json j{{"trade_id", t.trade_id},
         {"stage", market::stage_name(t.stage)},
         {"buyer", t.buyer.hex()},
         {"escrow_amount", t.escrow_amount},
         {"transitions", transitions}};
  if (t.receipt) j["receipt"] = to_json(*t.receipt);
  return j;
}

json to_json(const market::VulnerabilityEntry& v) {
  return json{{"position", v.position},
              {"affected_version", v.affected_version},
              {"note", v.note},
              {"published_at_ms", v.published_at_ms},
              {"platform_signature", hex_of(v.platform_signature.view())}};
}

json to_json(const ledger::AnchorCommitment& a) {
  return json{{"agent", a.agent.hex()},
              {"root_at", root_json(a.root_at)},
              {"wallclock_ms", a.wallclock_ms},
              {"signature", hex_of(a.signature.view())}};
}

json to_json(const market::AnchorEntry& a, market::AnchorWindow window) {
  return json{{"position", a.position},
              {"commitment", to_json(a.commitment)},
              {"received_at_ms", a.received_at_ms},
              {"platform_countersignature", hex_of(a.platform_countersignature.view())},
              {"window", window_name(window)}};
}

json to_json(const market::TraceManifest& m) {
  json entries = json::array();
  for (const market::TraceEntry& e : m.entries) {
    switch (e.kind) {
      case market::TraceEntry::Kind::SelfProduced:
        entries.push_back(json{{"kind", "self_produced"},
                               {"range_from", e.range_from},
                               {"range_to", e.range_to}});
        break;
      case market::TraceEntry::Kind::Purchased:
        entries.push_back(json{{"kind", "purchased"},
                               {"trade_id", e.trade_id},
                               {"seller", e.seller.hex()},
                               {"artifact_hash", e.artifact_hash.hex()},
                               {"referenced_root", root_json(e.referenced_root)}});
        break;
      case market::TraceEntry::Kind::Inherited:
        entries.push_back(json{{"kind", "inherited"}, {"record", to_json(e.inheritance)}});
        break;
    }
  }
  return json{{"owner", m.owner.hex()}, {"entries", entries}};
}

json to_json(const market::LineageReport& r) {
  json entries = json::array();
  for (const market::EntryVerdict& v : r.entries) {
    entries.push_back(
        json{{"index", v.index}, {"kind", v.kind}, {"ok", v.ok}, {"detail", v.detail}});
  }
  return json{{"entries", entries}, {"accepted", r.accepted},
              {"depth", r.depth},     {"self_produced", r.self_produced},
              {"purchased", r.purchased}, {"inherited", r.inherited}};
}

json to_json(const market::ReputationScore& s) {
  json j{{"eligible_reviews", s.eligible_reviews}};
  if (s.score) {
    j["score"] = *s.score;
  } else {
    j["score"] = nullptr;
  }
  return j;
}

json to_json(const ledger::VerificationReport& r) {
  json checks = json::array();
  for (const ledger::CheckResult& c : r.checks) {
    checks.push_back(json{{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  }
  return json{{"checks", checks},
              {"attachment_present", r.attachment_present},
              {"accepted", r.ok()}};
}

// ---------------------------------------------------------------------------

Result<crypto::Digest> parse_digest(const json& j) {
  using R = Result<crypto::Digest>;
  if (!j.is_string()) return R::failure("expected hex digest string");
  auto d = crypto::Digest::from_hex_str(j.get<std::string>());
  if (!d) return R::failure("malformed digest hex");
  return *d;
}

Result<crypto::PublicIdentity> parse_public(const json& j) {
  using R = Result<crypto::PublicIdentity>;
  if (!j.is_string()) return R::failure("expected hex public key string");
  auto raw = from_hex(j.get<std::string>());
  if (!raw) return R::failure("malformed public key hex");
  auto p = crypto::PublicIdentity::from_bytes(ByteView(*raw));
  if (!p) return R::failure("public key must be 32 bytes");
  return *p;
}

Result<crypto::Signature> parse_signature(const json& j) {
  using R = Result<crypto::Signature>;
  if (!j.is_string()) return R::failure("expected hex signature string");
  auto raw = from_hex(j.get<std::string>());
  if (!raw) return R::failure("malformed signature hex");
  auto s = crypto::Signature::from_bytes(ByteView(*raw));
  if (!s) return R::failure("signature must be 64 bytes");
  return *s;
}

Result<Bytes> parse_base64(const json& j) {
  using R = Result<Bytes>;
  if (!j.is_string()) return R::failure("expected base64 string");
  auto b = from_base64(j.get<std::string>());
  if (!b) return R::failure("malformed base64");
  return *b;
}

Result<uint64_t> parse_u64(const json& j) {
  using R = Result<uint64_t>;
  if (!j.is_number_unsigned()) return R::failure("expected a non-negative integer");
  return j.get<uint64_t>();
}

Result<ledger::AnchoredRoot> parse_root(const json& j) {
  using R = Result<ledger::AnchoredRoot>;
  if (!j.is_object()) return R::failure("expected anchored root object");
  auto length = parse_u64(j.value("length", json()));
  auto root = parse_digest(j.value("root", json()));
  if (!length.ok()) return R::failure("root.length: " + length.error());
  if (!root.ok()) return R::failure("root.root: " + root.error());
  return ledger::AnchoredRoot{length.value(), root.value()};
}

Result<enclave::AttestationReport> parse_report(const json& j) {
  using R = Result<enclave::AttestationReport>;
  try {
    const json& m = j.at("measurement");
    auto image = parse_digest(m.at("image_template_hash"));
    auto task = parse_digest(m.at("task_description_hash"));
    auto slot = parse_u64(m.at("slot_id"));
    auto owner = parse_digest(m.at("owner_seed_hash"));
    auto version = parse_u64(j.at("security_version"));
    auto agent = parse_public(j.at("agent_public"));
    auto nonce = parse_base64(j.at("nonce"));
    auto sig = parse_signature(j.at("vendor_signature"));
    if (!image.ok() || !task.ok() || !slot.ok() || !owner.ok() || !version.ok() || !agent.ok() ||
        !nonce.ok() || !sig.ok() || nonce.value().size() != 16) {
      return R::failure("malformed attestation report");
    }
    enclave::AttestationReport report;
    report.measurement = enclave::Measurement::compute(image.value(), task.value(), slot.value(),
                                                       owner.value());
    // The reported value must match its components; verification re-checks.
    if (m.contains("value")) {
      auto claimed = parse_digest(m.at("value"));
      if (!claimed.ok() || !(claimed.value() == report.measurement.value)) {
        return R::failure("measurement value does not recompute from components");
      }
    }
    report.security_version = version.value();
    report.agent_public = agent.value();
    std::copy(nonce.value().begin(), nonce.value().end(), report.nonce.begin());
    report.vendor_signature = sig.value();
    return report;
  } catch (const std::exception&) {
    return R::failure("malformed attestation report");
  }
}

Result<gang::GangTemplate> parse_template(const json& j) {
  using R = Result<gang::GangTemplate>;
  try {
    gang::GangTemplate t;
    t.task_description = j.at("task_description").get<std::string>();
    auto image = parse_digest(j.at("image_template_hash"));
    if (!image.ok()) return R::failure(image.error());
    t.image_template_hash = image.value();

    const json& p = j.at("model_provider");
    t.model_provider.endpoint = p.at("endpoint").get<std::string>();
    auto ppub = parse_public(p.at("provider_public"));
    if (!ppub.ok()) return R::failure(ppub.error());
    t.model_provider.provider_public = ppub.value();
    t.model_provider.model_name = p.at("model_name").get<std::string>();

    const json& lp = j.at("logging_policy");
    const json& fields = lp.at("fields");
    if (!fields.is_array() || fields.size() != ledger::kFieldCount) {
      return R::failure("logging_policy.fields must list all committed fields");
    }
    for (size_t i = 0; i < ledger::kFieldCount; ++i) {
      std::string name = fields[i].get<std::string>();
      if (name == "plaintext") {
        t.logging_policy.fields[i] = gang::FieldLogging::Plaintext;
      } else if (name == "digest_only") {
        t.logging_policy.fields[i] = gang::FieldLogging::DigestOnly;
      } else {
        return R::failure("unknown field logging mode: " + name);
      }
    }
    t.logging_policy.record_token_counts = lp.at("record_token_counts").get<bool>();
    t.logging_policy.record_timestamps = lp.at("record_timestamps").get<bool>();

    const json& tp = j.at("trade_policy");
    t.trade_policy.resale_allowed = tp.at("resale_allowed").get<bool>();
    t.trade_policy.full_prompt_disclosure = tp.at("full_prompt_disclosure").get<bool>();
    std::string settlement = tp.at("settlement").get<std::string>();
    if (settlement == "platform_escrow") {
      t.trade_policy.settlement = gang::SettlementMode::PlatformEscrow;
    } else if (settlement == "peer_to_peer") {
      t.trade_policy.settlement = gang::SettlementMode::PeerToPeer;
    } else {
      return R::failure("unknown settlement mode: " + settlement);
    }

    t.code_reference = j.at("code_reference").get<std::string>();
    auto min_version = parse_u64(j.at("min_security_version"));
    if (!min_version.ok()) return R::failure(min_version.error());
    t.min_security_version = min_version.value();
    return t;
  } catch (const std::exception&) {
    return R::failure("malformed gang template");
  }
}

Result<gang::MembershipCertificate> parse_certificate(const json& j) {
  using R = Result<gang::MembershipCertificate>;
  try {
    gang::MembershipCertificate c;
    auto gid = parse_digest(j.at("gang_id"));
    auto slot = parse_u64(j.at("slot_id"));
    auto agent = parse_public(j.at("agent_public"));
    auto mval = parse_digest(j.at("measurement_value"));
    auto version = parse_u64(j.at("security_version"));
    auto issued = parse_u64(j.at("issued_at_ms"));
    auto sig = parse_signature(j.at("platform_signature"));
    if (!gid.ok() || !slot.ok() || !agent.ok() || !mval.ok() || !version.ok() || !issued.ok() ||
        !sig.ok()) {
      return R::failure("malformed membership certificate");
    }
    c.gang_id = gid.value();
    c.slot_id = slot.value();
    c.agent_public = agent.value();
    c.measurement_value = mval.value();
    c.security_version = version.value();
    c.issued_at_ms = issued.value();
    c.platform_signature = sig.value();
    return c;
  } catch (const std::exception&) {
    return R::failure("malformed membership certificate");
  }
}

Result<enclave::DeliveryReceipt> parse_receipt(const json& j) {
  using R = Result<enclave::DeliveryReceipt>;
  try {
    enclave::DeliveryReceipt r;
    auto trade = parse_u64(j.at("trade_id"));
    auto buyer = parse_public(j.at("buyer"));
    auto hash = parse_digest(j.at("artifact_hash"));
    auto root = parse_root(j.at("referenced_root"));
    auto sig = parse_signature(j.at("enclave_signature"));
    if (!trade.ok() || !buyer.ok() || !hash.ok() || !root.ok() || !sig.ok()) {
      return R::failure("malformed delivery receipt");
    }
    r.trade_id = trade.value();
    r.buyer = buyer.value();
    r.artifact_hash = hash.value();
    r.referenced_root = root.value();
    r.enclave_signature = sig.value();
    return r;
  } catch (const std::exception&) {
    return R::failure("malformed delivery receipt");
  }
}

Result<enclave::PurchaseToken> parse_token(const json& j) {
  using R = Result<enclave::PurchaseToken>;
  try {
    enclave::PurchaseToken t;
    auto seller = parse_public(j.at("seller"));
    auto trade = parse_u64(j.at("trade_id"));
    auto buyer = parse_public(j.at("buyer"));
    auto sig = parse_signature(j.at("seller_signature"));
    if (!seller.ok() || !trade.ok() || !buyer.ok() || !sig.ok()) {
      return R::failure("malformed purchase token");
    }
    t.seller = seller.value();
    t.trade_id = trade.value();
    t.buyer = buyer.value();
    t.seller_signature = sig.value();
    return t;
  } catch (const std::exception&) {
    return R::failure("malformed purchase token");
  }
}

Result<enclave::InheritanceRecord> parse_inheritance(const json& j) {
  using R = Result<enclave::InheritanceRecord>;
  try {
    enclave::InheritanceRecord r;
    auto pred = parse_public(j.at("predecessor"));
    auto succ = parse_public(j.at("successor"));
    auto root = parse_root(j.at("root_at_transfer"));
    auto owner = parse_public(j.at("owner_public"));
    auto osig = parse_signature(j.at("owner_authorization"));
    auto esig = parse_signature(j.at("enclave_signature"));
    if (!pred.ok() || !succ.ok() || !root.ok() || !owner.ok() || !osig.ok() || !esig.ok()) {
      return R::failure("malformed inheritance record");
    }
    r.predecessor = pred.value();
    r.successor = succ.value();
    r.root_at_transfer = root.value();
    r.owner_public = owner.value();
    r.owner_authorization = osig.value();
    r.enclave_signature = esig.value();
    return r;
  } catch (const std::exception&) {
    return R::failure("malformed inheritance record");
  }
}

Result<market::ListingDraft> parse_listing_draft(const json& j) {
  using R = Result<market::ListingDraft>;
  try {
    market::ListingDraft d;
    auto cert = parse_certificate(j.at("seller_cert"));
    if (!cert.ok()) return R::failure(cert.error());
    d.seller_cert = cert.value();
    auto price = parse_u64(j.at("price"));
    if (!price.ok()) return R::failure("price: " + price.error());
    d.price = price.value();

    const json& m = j.at("certified_metadata");
    auto root = parse_root(m.at("claimed_root"));
    auto count = parse_u64(m.at("interaction_count"));
    auto tin = parse_u64(m.at("total_token_in"));
    auto tout = parse_u64(m.at("total_token_out"));
    auto t0 = parse_u64(m.at("first_timestamp_ms"));
    auto t1 = parse_u64(m.at("last_timestamp_ms"));
    auto advertisement = parse_base64(m.at("advertisement"));
    if (!root.ok() || !count.ok() || !tin.ok() || !tout.ok() || !t0.ok() || !t1.ok() ||
        !advertisement.ok()) {
      return R::failure("malformed certified metadata");
    }
    d.metadata.claimed_root = root.value();
    d.metadata.interaction_count = count.value();
    d.metadata.total_token_in = tin.value();
    d.metadata.total_token_out = tout.value();
    d.metadata.first_timestamp_ms = t0.value();
    d.metadata.last_timestamp_ms = t1.value();
    d.metadata.advertisement = advertisement.value();

    d.resale_allowed = j.at("resale_allowed").get<bool>();
    d.seller_endpoint = j.at("seller_endpoint").get<std::string>();
    auto hash = parse_digest(j.at("encrypted_artifact_hash"));
    if (!hash.ok()) return R::failure(hash.error());
    d.encrypted_artifact_hash = hash.value();
    return d;
  } catch (const std::exception&) {
    return R::failure("malformed listing");
  }
}

Result<ledger::AnchorCommitment> parse_anchor(const json& j) {
  using R = Result<ledger::AnchorCommitment>;
  try {
    ledger::AnchorCommitment a;
    auto agent = parse_public(j.at("agent"));
    auto root = parse_root(j.at("root_at"));
    auto wallclock = parse_u64(j.at("wallclock_ms"));
    auto sig = parse_signature(j.at("signature"));
    if (!agent.ok() || !root.ok() || !wallclock.ok() || !sig.ok()) {
      return R::failure("malformed anchor commitment");
    }
    a.agent = agent.value();
    a.root_at = root.value();
    a.wallclock_ms = wallclock.value();
    a.signature = sig.value();
    return a;
  } catch (const std::exception&) {
    return R::failure("malformed anchor commitment");
  }
}

Result<market::TraceManifest> parse_manifest(const json& j) {
  using R = Result<market::TraceManifest>;
  try {
    market::TraceManifest m;
    auto owner = parse_public(j.at("owner"));
    if (!owner.ok()) return R::failure(owner.error());
    m.owner = owner.value();
    for (const json& e : j.at("entries")) {
      market::TraceEntry entry;
      std::string kind = e.at("kind").get<std::string>();
      if (kind == "self_produced") {
        entry.kind = market::TraceEntry::Kind::SelfProduced;
        auto from = parse_u64(e.at("range_from"));
        auto to = parse_u64(e.at("range_to"));
        if (!from.ok() || !to.ok()) return R::failure("malformed self-produced range");
        entry.range_from = from.value();
        entry.range_to = to.value();
      } else if (kind == "purchased") {
        entry.kind = market::TraceEntry::Kind::Purchased;
        auto trade = parse_u64(e.at("trade_id"));
        auto seller = parse_public(e.at("seller"));
        auto hash = parse_digest(e.at("artifact_hash"));
        auto root = parse_root(e.at("referenced_root"));
        if (!trade.ok() || !seller.ok() || !hash.ok() || !root.ok()) {
          return R::failure("malformed purchased entry");
        }
        entry.trade_id = trade.value();
        entry.seller = seller.value();
        entry.artifact_hash = hash.value();
        entry.referenced_root = root.value();
      } else if (kind == "inherited") {
        entry.kind = market::TraceEntry::Kind::Inherited;
        auto record = parse_inheritance(e.at("record"));
        if (!record.ok()) return R::failure(record.error());
        entry.inheritance = record.value();
      } else {
        return R::failure("unknown trace entry kind: " + kind);
      }
      m.entries.push_back(std::move(entry));
    }
    return m;
  } catch (const std::exception&) {
    return R::failure("malformed trace manifest");
  }
}

}  // namespace memtrade::wire
