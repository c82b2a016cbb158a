#include "memtrade/ledger.hpp"

#include <algorithm>
#include <sstream>

namespace memtrade::ledger {

using canon::Value;
using crypto::Digest;
using crypto::DomainTag;

canon::Value field_value(const InteractionRecord& rec, size_t field) {
  switch (field) {
    case kPrompt: return Value::bytes(ByteView(rec.prompt));
    case kResponse: return Value::bytes(ByteView(rec.response));
    case kModelName: return Value::bytes(rec.model_name);
    case kTokenIn: return Value::u64(rec.token_in);
    case kTokenOut: return Value::u64(rec.token_out);
    case kTimestamp: return Value::u64(rec.timestamp_ms);
    default: return Value::bytes("");
  }
}

InteractionDigest digest_record(const InteractionRecord& rec) {
  InteractionDigest out;
  out.seq_no = rec.seq_no;
  for (size_t f = 0; f < kFieldCount; ++f) {
    Bytes leaf = field_value(rec, f).encode();
    out.field_digests[f] = crypto::commit(DomainTag::Field, rec.field_salts[f], leaf);
  }
  out.digest = interaction_digest_over(rec.seq_no, out.field_digests);
  return out;
}

crypto::Digest interaction_digest_over(uint64_t seq_no,
                                       const std::array<Digest, kFieldCount>& field_digests) {
  std::vector<Value> digests;
  digests.reserve(kFieldCount);
  for (const Digest& d : field_digests) digests.push_back(Value::bytes(d.view()));
  Bytes payload = Value::record({Value::u64(seq_no), Value::list(std::move(digests))}).encode();
  return crypto::digest(DomainTag::Interaction, payload);
}

AnchoredRoot genesis(const GenesisInputs& inputs) {
  Bytes payload = Value::record({Value::bytes(inputs.gang_config_hash.view()),
                                 Value::bytes(inputs.agent.view())})
                      .encode();
  return AnchoredRoot{0, crypto::digest(DomainTag::Root, payload)};
}

crypto::Digest chain_next(const Digest& prev_root, const Digest& interaction_digest) {
  Bytes payload =
      Value::record({Value::bytes(prev_root.view()), Value::bytes(interaction_digest.view())})
          .encode();
  return crypto::digest(DomainTag::Root, payload);
}

std::optional<Bytes> opened_bytes(const FieldEntry& entry) {
  if (!entry.opened) return std::nullopt;
  auto leaf = Value::decode(ByteView(entry.value));
  if (!leaf || !leaf->is_bytes()) return std::nullopt;
  return leaf->as_bytes();
}

std::optional<uint64_t> opened_u64(const FieldEntry& entry) {
  if (!entry.opened) return std::nullopt;
  auto leaf = Value::decode(ByteView(entry.value));
  if (!leaf || !leaf->is_u64()) return std::nullopt;
  return leaf->as_u64();
}

DisclosurePolicy open_all() {
  DisclosurePolicy p;
  p.fill(FieldDisclosure::Open);
  return p;
}

DisclosurePolicy hide_all() {
  DisclosurePolicy p;
  p.fill(FieldDisclosure::Hide);
  return p;
}

Log::Log(GenesisInputs inputs) : genesis_(inputs) {
  current_root_ = genesis(genesis_);
  roots_.push_back(current_root_.root);
}

Result<AnchoredRoot> Log::root_at(uint64_t length) const {
  if (length >= roots_.size()) {
    return Result<AnchoredRoot>::failure("prefix length exceeds log length");
  }
  return AnchoredRoot{length, roots_[length]};
}

InteractionRecord Log::make_record(Bytes prompt, Bytes response, std::string model_name,
                                   uint64_t token_in, uint64_t token_out, uint64_t timestamp_ms,
                                   Rng& rng) const {
  InteractionRecord rec;
  rec.seq_no = size();
  rec.prompt = std::move(prompt);
  rec.response = std::move(response);
  rec.model_name = std::move(model_name);
  rec.token_in = token_in;
  rec.token_out = token_out;
  rec.timestamp_ms = timestamp_ms;
  for (auto& salt : rec.field_salts) salt = rng.bytes16();
  return rec;
}

Result<AnchoredRoot> Log::append(InteractionRecord rec) {
  if (rec.seq_no != size()) {
    return Result<AnchoredRoot>::failure("seq_no mismatch: expected " + std::to_string(size()));
  }
  if (!records_.empty() && rec.timestamp_ms < records_.back().timestamp_ms) {
    return Result<AnchoredRoot>::failure("timestamp regression");
  }
  InteractionDigest idigest = digest_record(rec);
  Digest next = chain_next(current_root_.root, idigest.digest);
  records_.push_back(std::move(rec));
  digests_.push_back(std::move(idigest));
  roots_.push_back(next);
  current_root_ = AnchoredRoot{records_.size(), next};
  return current_root_;
}

Result<ArtifactBundle> Log::build_artifact(std::vector<uint64_t> selection,
                                           const DisclosurePolicy& policy,
                                           std::optional<Bytes> attachment) const {
  std::vector<DisclosurePolicy> policies(selection.size(), policy);
  return build_artifact(std::move(selection), policies, std::move(attachment));
}

Result<ArtifactBundle> Log::build_artifact(std::vector<uint64_t> selection,
                                           const std::vector<DisclosurePolicy>& policies,
                                           std::optional<Bytes> attachment) const {
  std::sort(selection.begin(), selection.end());
  if (std::adjacent_find(selection.begin(), selection.end()) != selection.end()) {
    return Result<ArtifactBundle>::failure("duplicate selection index");
  }
  if (policies.size() != selection.size()) {
    return Result<ArtifactBundle>::failure("policy missing for a selected interaction");
  }
  for (uint64_t idx : selection) {
    if (idx >= size()) {
      return Result<ArtifactBundle>::failure("selection index out of range: " + std::to_string(idx));
    }
  }

  ArtifactBundle bundle;
  bundle.artifact.selection = selection;
  bundle.artifact.claimed_root = current_root_;
  bundle.artifact.claimed_genesis = genesis_;
  if (attachment) {
    bundle.artifact.attachment_hash = crypto::digest(DomainTag::Field, ByteView(*attachment));
  }

  for (size_t s = 0; s < selection.size(); ++s) {
    uint64_t idx = selection[s];
    const InteractionRecord& rec = records_[idx];
    const InteractionDigest& idig = digests_[idx];
    DisclosedInteraction di;
    di.seq_no = idx;
    for (size_t f = 0; f < kFieldCount; ++f) {
      FieldEntry& entry = di.fields[f];
      if (policies[s][f] == FieldDisclosure::Open) {
        entry.opened = true;
        entry.value = field_value(rec, f).encode();
        entry.salt = rec.field_salts[f];
      } else {
        entry.opened = false;
        entry.hidden = idig.field_digests[f];
      }
    }
    bundle.artifact.interactions.push_back(std::move(di));
    bundle.proof.selected_field_digests.push_back(idig.field_digests);
  }

  bundle.proof.interaction_digests.reserve(size());
  for (const InteractionDigest& d : digests_) bundle.proof.interaction_digests.push_back(d.digest);

  return bundle;
}

namespace {

Value root_value(const AnchoredRoot& r) {
  return Value::record({Value::u64(r.length), Value::bytes(r.root.view())});
}

Value genesis_value(const GenesisInputs& g) {
  return Value::record({Value::bytes(g.gang_config_hash.view()), Value::bytes(g.agent.view())});
}

std::optional<AnchoredRoot> root_from_value(const Value& v) {
  if (!v.is_record() || v.items().size() != 2) return std::nullopt;
  if (!v.items()[0].is_u64() || !v.items()[1].is_bytes()) return std::nullopt;
  auto d = Digest::from_bytes(ByteView(v.items()[1].as_bytes()));
  if (!d) return std::nullopt;
  return AnchoredRoot{v.items()[0].as_u64(), *d};
}

std::optional<GenesisInputs> genesis_from_value(const Value& v) {
  if (!v.is_record() || v.items().size() != 2) return std::nullopt;
  if (!v.items()[0].is_bytes() || !v.items()[1].is_bytes()) return std::nullopt;
  auto gch = Digest::from_bytes(ByteView(v.items()[0].as_bytes()));
  auto agent = crypto::PublicIdentity::from_bytes(ByteView(v.items()[1].as_bytes()));
  if (!gch || !agent) return std::nullopt;
  return GenesisInputs{*gch, *agent};
}

}  // namespace

Bytes serialize_bundle(const ArtifactBundle& bundle) {
  const MemoryArtifact& a = bundle.artifact;

  std::vector<Value> selection;
  for (uint64_t idx : a.selection) selection.push_back(Value::u64(idx));

  std::vector<Value> interactions;
  for (const DisclosedInteraction& di : a.interactions) {
    std::vector<Value> fields;
    for (const FieldEntry& fe : di.fields) {
      if (fe.opened) {
        fields.push_back(Value::record({Value::u64(1), Value::bytes(ByteView(fe.value)),
                                        Value::bytes(ByteView(fe.salt.data(), fe.salt.size()))}));
      } else {
        fields.push_back(
            Value::record({Value::u64(0), Value::bytes(fe.hidden.view()), Value::bytes("")}));
      }
    }
    interactions.push_back(Value::record({Value::u64(di.seq_no), Value::list(std::move(fields))}));
  }

  Value attachment = a.attachment_hash
                         ? Value::record({Value::u64(1), Value::bytes(a.attachment_hash->view())})
                         : Value::record({Value::u64(0), Value::bytes("")});

  std::vector<Value> chain;
  for (const Digest& d : bundle.proof.interaction_digests) chain.push_back(Value::bytes(d.view()));

  std::vector<Value> vectors;
  for (const auto& vec : bundle.proof.selected_field_digests) {
    std::vector<Value> entries;
    for (const Digest& d : vec) entries.push_back(Value::bytes(d.view()));
    vectors.push_back(Value::list(std::move(entries)));
  }

  Value payload = Value::record({
      Value::list(std::move(selection)),
      Value::list(std::move(interactions)),
      std::move(attachment),
      root_value(a.claimed_root),
      genesis_value(a.claimed_genesis),
      Value::record({Value::list(std::move(chain)), Value::list(std::move(vectors))}),
  });

  return seal_container(kArtifactMagic, kContainerVersion, payload.encode());
}

std::optional<ArtifactBundle> parse_bundle(ByteView container) {
  auto payload = open_container(kArtifactMagic, kContainerVersion, container);
  if (!payload) return std::nullopt;
  auto value = Value::decode(*payload);
  if (!value || !value->is_record() || value->items().size() != 6) return std::nullopt;

  const auto& items = value->items();
  ArtifactBundle bundle;
  MemoryArtifact& a = bundle.artifact;

  // selection
  if (!items[0].is_list()) return std::nullopt;
  for (const Value& v : items[0].items()) {
    if (!v.is_u64()) return std::nullopt;
    a.selection.push_back(v.as_u64());
  }

  // disclosed interactions
  if (!items[1].is_list()) return std::nullopt;
  for (const Value& iv : items[1].items()) {
    if (!iv.is_record() || iv.items().size() != 2) return std::nullopt;
    if (!iv.items()[0].is_u64() || !iv.items()[1].is_list()) return std::nullopt;
    DisclosedInteraction di;
    di.seq_no = iv.items()[0].as_u64();
    const auto& fields = iv.items()[1].items();
    if (fields.size() != kFieldCount) return std::nullopt;
    for (size_t f = 0; f < kFieldCount; ++f) {
      const Value& fv = fields[f];
      if (!fv.is_record() || fv.items().size() != 3) return std::nullopt;
      if (!fv.items()[0].is_u64() || !fv.items()[1].is_bytes() || !fv.items()[2].is_bytes()) {
        return std::nullopt;
      }
      FieldEntry& fe = di.fields[f];
      uint64_t flag = fv.items()[0].as_u64();
      if (flag == 1) {
        fe.opened = true;
        fe.value = fv.items()[1].as_bytes();
        const Bytes& salt = fv.items()[2].as_bytes();
        if (salt.size() != fe.salt.size()) return std::nullopt;
        std::copy(salt.begin(), salt.end(), fe.salt.begin());
      } else if (flag == 0) {
        fe.opened = false;
        auto d = Digest::from_bytes(ByteView(fv.items()[1].as_bytes()));
        if (!d || !fv.items()[2].as_bytes().empty()) return std::nullopt;
        fe.hidden = *d;
      } else {
        return std::nullopt;
      }
    }
    a.interactions.push_back(std::move(di));
  }

  // attachment
  if (!items[2].is_record() || items[2].items().size() != 2) return std::nullopt;
  if (!items[2].items()[0].is_u64() || !items[2].items()[1].is_bytes()) return std::nullopt;
  uint64_t att_flag = items[2].items()[0].as_u64();
  if (att_flag == 1) {
    auto d = Digest::from_bytes(ByteView(items[2].items()[1].as_bytes()));
    if (!d) return std::nullopt;
    a.attachment_hash = *d;
  } else if (att_flag == 0) {
    if (!items[2].items()[1].as_bytes().empty()) return std::nullopt;
  } else {
    return std::nullopt;
  }

  auto root = root_from_value(items[3]);
  auto gen = genesis_from_value(items[4]);
  if (!root || !gen) return std::nullopt;
  a.claimed_root = *root;
  a.claimed_genesis = *gen;

  // proof
  if (!items[5].is_record() || items[5].items().size() != 2) return std::nullopt;
  const Value& chain = items[5].items()[0];
  const Value& vectors = items[5].items()[1];
  if (!chain.is_list() || !vectors.is_list()) return std::nullopt;
  for (const Value& v : chain.items()) {
    if (!v.is_bytes()) return std::nullopt;
    auto d = Digest::from_bytes(ByteView(v.as_bytes()));
    if (!d) return std::nullopt;
    bundle.proof.interaction_digests.push_back(*d);
  }
  for (const Value& vec : vectors.items()) {
    if (!vec.is_list() || vec.items().size() != kFieldCount) return std::nullopt;
    std::array<Digest, kFieldCount> fd{};
    for (size_t f = 0; f < kFieldCount; ++f) {
      if (!vec.items()[f].is_bytes()) return std::nullopt;
      auto d = Digest::from_bytes(ByteView(vec.items()[f].as_bytes()));
      if (!d) return std::nullopt;
      fd[f] = *d;
    }
    bundle.proof.selected_field_digests.push_back(fd);
  }

  return bundle;
}

crypto::Digest artifact_hash(ByteView container_bytes) {
  return crypto::digest(DomainTag::Field, container_bytes);
}

bool VerificationReport::ok() const {
  if (checks.empty()) return false;
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

void VerificationReport::add(std::string name, bool pass, std::string detail) {
  checks.push_back(CheckResult{std::move(name), pass, std::move(detail)});
}

std::string VerificationReport::to_string() const {
  std::ostringstream out;
  for (const CheckResult& c : checks) {
    out << (c.pass ? "[ok]   " : "[FAIL] ") << c.name;
    if (!c.detail.empty()) out << ": " << c.detail;
    out << "\n";
  }
  if (attachment_present) {
    out << "[note] artifact carries an uncertified attachment hash\n";
  }
  out << (ok() ? "result: ACCEPT" : "result: REJECT") << "\n";
  return out.str();
}

VerificationReport verify_artifact(const ArtifactBundle& bundle, const AnchoredRoot& expected_root,
                                   const GenesisInputs& genesis_inputs) {
  VerificationReport report;
  const MemoryArtifact& a = bundle.artifact;
  const DisclosureProof& proof = bundle.proof;
  report.attachment_present = a.attachment_hash.has_value();

  report.add("root_matches_expected",
             a.claimed_root == expected_root,
             "claimed length " + std::to_string(a.claimed_root.length));
  report.add("genesis_matches_expected", a.claimed_genesis == genesis_inputs);

  bool selection_sorted = std::is_sorted(a.selection.begin(), a.selection.end()) &&
                          std::adjacent_find(a.selection.begin(), a.selection.end()) ==
                              a.selection.end();
  bool selection_in_range = std::all_of(a.selection.begin(), a.selection.end(),
                                        [&](uint64_t i) { return i < a.claimed_root.length; });
  report.add("selection_well_formed", selection_sorted && selection_in_range);

  bool shape_ok = a.interactions.size() == a.selection.size() &&
                  proof.selected_field_digests.size() == a.selection.size();
  for (size_t s = 0; shape_ok && s < a.selection.size(); ++s) {
    if (a.interactions[s].seq_no != a.selection[s]) shape_ok = false;
  }
  report.add("disclosure_shape", shape_ok);

  report.add("proof_covers_full_log", proof.interaction_digests.size() == a.claimed_root.length);

  // (a) chain replay from genesis
  crypto::Digest running = genesis(genesis_inputs).root;
  for (const crypto::Digest& d : proof.interaction_digests) running = chain_next(running, d);
  report.add("chain_replay", running == expected_root.root &&
                                 proof.interaction_digests.size() == expected_root.length);

  // (b) opened-field commitments and (c) interaction digest consistency
  bool commitments_ok = shape_ok;
  bool interactions_ok = shape_ok;
  for (size_t s = 0; shape_ok && s < a.selection.size(); ++s) {
    uint64_t idx = a.selection[s];
    const DisclosedInteraction& di = a.interactions[s];
    const auto& fd = proof.selected_field_digests[s];
    for (size_t f = 0; f < kFieldCount; ++f) {
      const FieldEntry& fe = di.fields[f];
      if (fe.opened) {
        crypto::Digest recomputed = crypto::commit(DomainTag::Field, fe.salt, ByteView(fe.value));
        if (recomputed != fd[f]) commitments_ok = false;
      } else if (fe.hidden != fd[f]) {
        commitments_ok = false;
      }
    }
    crypto::Digest idig = interaction_digest_over(di.seq_no, fd);
    if (idx >= proof.interaction_digests.size() || idig != proof.interaction_digests[idx]) {
      interactions_ok = false;
    }
  }
  report.add("field_commitments", commitments_ok);
  report.add("interaction_digests", interactions_ok);

  return report;
}

VerificationReport verify_artifact_bytes(ByteView container, const AnchoredRoot& expected_root,
                                         const GenesisInputs& genesis_inputs) {
  auto bundle = parse_bundle(container);
  if (!bundle) {
    VerificationReport report;
    report.add("parse_container", false, "malformed artifact container");
    return report;
  }
  VerificationReport report = verify_artifact(*bundle, expected_root, genesis_inputs);
  report.checks.insert(report.checks.begin(), CheckResult{"parse_container", true, ""});
  return report;
}

Bytes anchor_payload(const crypto::PublicIdentity& agent, const AnchoredRoot& root_at,
                     uint64_t wallclock_ms) {
  return Value::record({Value::bytes(agent.view()), Value::u64(root_at.length),
                        Value::bytes(root_at.root.view()), Value::u64(wallclock_ms)})
      .encode();
}

bool verify_anchor(const AnchorCommitment& commitment) {
  Bytes payload = anchor_payload(commitment.agent, commitment.root_at, commitment.wallclock_ms);
  return crypto::verify(commitment.agent, DomainTag::Anchor, ByteView(payload),
                        commitment.signature);
}

Bytes Log::serialize() const {
  std::vector<Value> recs;
  recs.reserve(records_.size());
  for (const InteractionRecord& r : records_) {
    std::vector<Value> salts;
    for (const crypto::Salt& s : r.field_salts) salts.push_back(Value::bytes(ByteView(s.data(), s.size())));
    recs.push_back(Value::record({
        Value::u64(r.seq_no),
        Value::bytes(ByteView(r.prompt)),
        Value::bytes(ByteView(r.response)),
        Value::bytes(r.model_name),
        Value::u64(r.token_in),
        Value::u64(r.token_out),
        Value::u64(r.timestamp_ms),
        Value::list(std::move(salts)),
    }));
  }
  return Value::record({genesis_value(genesis_), Value::list(std::move(recs))}).encode();
}

std::optional<Log> Log::restore(ByteView bytes) {
  auto value = Value::decode(bytes);
  if (!value || !value->is_record() || value->items().size() != 2) return std::nullopt;
  auto gen = genesis_from_value(value->items()[0]);
  if (!gen || !value->items()[1].is_list()) return std::nullopt;
  Log log(*gen);
  for (const Value& rv : value->items()[1].items()) {
    if (!rv.is_record() || rv.items().size() != 8) return std::nullopt;
    const auto& f = rv.items();
    if (!f[0].is_u64() || !f[1].is_bytes() || !f[2].is_bytes() || !f[3].is_bytes() ||
        !f[4].is_u64() || !f[5].is_u64() || !f[6].is_u64() || !f[7].is_list()) {
      return std::nullopt;
    }
    InteractionRecord rec;
    rec.seq_no = f[0].as_u64();
    rec.prompt = f[1].as_bytes();
    rec.response = f[2].as_bytes();
    rec.model_name = to_string(ByteView(f[3].as_bytes()));
    rec.token_in = f[4].as_u64();
    rec.token_out = f[5].as_u64();
    rec.timestamp_ms = f[6].as_u64();
    if (f[7].items().size() != kFieldCount) return std::nullopt;
    for (size_t i = 0; i < kFieldCount; ++i) {
      const Value& sv = f[7].items()[i];
      if (!sv.is_bytes() || sv.as_bytes().size() != rec.field_salts[i].size()) return std::nullopt;
      std::copy(sv.as_bytes().begin(), sv.as_bytes().end(), rec.field_salts[i].begin());
    }
    auto appended = log.append(std::move(rec));
    if (!appended.ok()) return std::nullopt;
  }
  return log;
}

}  // namespace memtrade::ledger
