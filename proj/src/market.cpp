#include "memtrade/market.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace memtrade::market {

using canon::Value;
using crypto::Digest;
using crypto::DomainTag;
using crypto::PublicIdentity;
using crypto::Signature;

std::string_view stage_name(TradeStage stage) {
  switch (stage) {
    case TradeStage::Posted: return "posted";
    case TradeStage::Locked: return "locked";
    case TradeStage::Delivered: return "delivered";
    case TradeStage::Settled: return "settled";
    case TradeStage::Disputed: return "disputed";
    case TradeStage::Refunded: return "refunded";
    case TradeStage::Cancelled: return "cancelled";
  }
  return "unknown";
}

Bytes review_payload(const PublicIdentity& seller, uint64_t trade_id, uint32_t rating,
                     const std::string& comment) {
  return Value::record({Value::bytes(seller.view()), Value::u64(trade_id), Value::u64(rating),
                        Value::bytes(comment)})
      .encode();
}

Bytes lock_payload(uint64_t listing_id, uint64_t amount, const std::string& idempotency_key) {
  return Value::record({Value::u64(listing_id), Value::u64(amount), Value::bytes(idempotency_key)})
      .encode();
}

Bytes resolve_payload(uint64_t trade_id, bool settle) {
  return Value::record({Value::u64(trade_id), Value::u64(settle ? 1 : 0)}).encode();
}

Bytes vulnerability_payload(uint64_t affected_version, const std::string& note) {
  return Value::record({Value::u64(affected_version), Value::bytes(note)}).encode();
}

std::string LineageReport::to_string() const {
  std::ostringstream out;
  for (const EntryVerdict& v : entries) {
    out << (v.ok ? "[ok]   " : "[FAIL] ") << "entry " << v.index << " (" << v.kind << ")";
    if (!v.detail.empty()) out << ": " << v.detail;
    out << "\n";
  }
  out << "composition: " << self_produced << " self-produced, " << purchased << " purchased, "
      << inherited << " inherited; lineage depth " << depth << "\n";
  out << (accepted ? "result: ACCEPT" : "result: REJECT") << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Canonical codecs for journaled structures.

namespace {

Value value_of_sig(const Signature& s) {
  return Value::bytes(s.view());
}

std::optional<Signature> sig_from(const Value& v) {
  if (!v.is_bytes()) return std::nullopt;
  return Signature::from_bytes(ByteView(v.as_bytes()));
}

std::optional<PublicIdentity> pub_from(const Value& v) {
  if (!v.is_bytes()) return std::nullopt;
  return PublicIdentity::from_bytes(ByteView(v.as_bytes()));
}

std::optional<Digest> digest_from(const Value& v) {
  if (!v.is_bytes()) return std::nullopt;
  return Digest::from_bytes(ByteView(v.as_bytes()));
}

Value value_of_report(const enclave::AttestationReport& r) {
  return Value::record({
      Value::bytes(r.measurement.image_template_hash.view()),
      Value::bytes(r.measurement.task_description_hash.view()),
      Value::u64(r.measurement.slot_id),
      Value::bytes(r.measurement.owner_seed_hash.view()),
      Value::u64(r.security_version),
      Value::bytes(r.agent_public.view()),
      Value::bytes(ByteView(r.nonce.data(), r.nonce.size())),
      value_of_sig(r.vendor_signature),
  });
}

std::optional<enclave::AttestationReport> report_from(const Value& v) {
  if (!v.is_record() || v.items().size() != 8) return std::nullopt;
  const auto& f = v.items();
  auto image = digest_from(f[0]);
  auto task = digest_from(f[1]);
  auto owner = digest_from(f[3]);
  auto agent = pub_from(f[5]);
  auto sig = sig_from(f[7]);
  if (!image || !task || !owner || !f[2].is_u64() || !f[4].is_u64() || !agent ||
      !f[6].is_bytes() || f[6].as_bytes().size() != 16 || !sig) {
    return std::nullopt;
  }
  enclave::AttestationReport r;
  r.measurement = enclave::Measurement::compute(*image, *task, f[2].as_u64(), *owner);
  r.security_version = f[4].as_u64();
  r.agent_public = *agent;
  std::copy(f[6].as_bytes().begin(), f[6].as_bytes().end(), r.nonce.begin());
  r.vendor_signature = *sig;
  return r;
}

Value value_of_cert(const gang::MembershipCertificate& c) {
  return Value::record({
      Value::bytes(c.gang_id.view()),
      Value::u64(c.slot_id),
      Value::bytes(c.agent_public.view()),
      Value::bytes(c.measurement_value.view()),
      Value::u64(c.security_version),
      Value::u64(c.issued_at_ms),
      value_of_sig(c.platform_signature),
  });
}

std::optional<gang::MembershipCertificate> cert_from(const Value& v) {
  if (!v.is_record() || v.items().size() != 7) return std::nullopt;
  const auto& f = v.items();
  auto gid = digest_from(f[0]);
  auto agent = pub_from(f[2]);
  auto mval = digest_from(f[3]);
  auto sig = sig_from(f[6]);
  if (!gid || !f[1].is_u64() || !agent || !mval || !f[4].is_u64() || !f[5].is_u64() || !sig) {
    return std::nullopt;
  }
  return gang::MembershipCertificate{*gid,          f[1].as_u64(), *agent, *mval,
                                     f[4].as_u64(), f[5].as_u64(), *sig};
}

Value value_of_root(const ledger::AnchoredRoot& r) {
  return Value::record({Value::u64(r.length), Value::bytes(r.root.view())});
}

std::optional<ledger::AnchoredRoot> root_from(const Value& v) {
  if (!v.is_record() || v.items().size() != 2 || !v.items()[0].is_u64()) return std::nullopt;
  auto d = digest_from(v.items()[1]);
  if (!d) return std::nullopt;
  return ledger::AnchoredRoot{v.items()[0].as_u64(), *d};
}

Value value_of_receipt(const enclave::DeliveryReceipt& r) {
  return Value::record({
      Value::u64(r.trade_id),
      Value::bytes(r.buyer.view()),
      Value::bytes(r.artifact_hash.view()),
      value_of_root(r.referenced_root),
      value_of_sig(r.enclave_signature),
  });
}

std::optional<enclave::DeliveryReceipt> receipt_from(const Value& v) {
  if (!v.is_record() || v.items().size() != 5 || !v.items()[0].is_u64()) return std::nullopt;
  auto buyer = pub_from(v.items()[1]);
  auto hash = digest_from(v.items()[2]);
  auto root = root_from(v.items()[3]);
  auto sig = sig_from(v.items()[4]);
  if (!buyer || !hash || !root || !sig) return std::nullopt;
  return enclave::DeliveryReceipt{v.items()[0].as_u64(), *buyer, *hash, *root, *sig};
}

Value value_of_token(const enclave::PurchaseToken& t) {
  return Value::record({
      Value::bytes(t.seller.view()),
      Value::u64(t.trade_id),
      Value::bytes(t.buyer.view()),
      value_of_sig(t.seller_signature),
  });
}

std::optional<enclave::PurchaseToken> token_from(const Value& v) {
  if (!v.is_record() || v.items().size() != 4 || !v.items()[1].is_u64()) return std::nullopt;
  auto seller = pub_from(v.items()[0]);
  auto buyer = pub_from(v.items()[2]);
  auto sig = sig_from(v.items()[3]);
  if (!seller || !buyer || !sig) return std::nullopt;
  return enclave::PurchaseToken{*seller, v.items()[1].as_u64(), *buyer, *sig};
}

Value value_of_anchor(const ledger::AnchorCommitment& a) {
  return Value::record({
      Value::bytes(a.agent.view()),
      value_of_root(a.root_at),
      Value::u64(a.wallclock_ms),
      value_of_sig(a.signature),
  });
}

std::optional<ledger::AnchorCommitment> anchor_from(const Value& v) {
  if (!v.is_record() || v.items().size() != 4 || !v.items()[2].is_u64()) return std::nullopt;
  auto agent = pub_from(v.items()[0]);
  auto root = root_from(v.items()[1]);
  auto sig = sig_from(v.items()[3]);
  if (!agent || !root || !sig) return std::nullopt;
  return ledger::AnchorCommitment{*agent, *root, v.items()[2].as_u64(), *sig};
}

Value value_of_metadata(const CertifiedMetadata& m) {
  return Value::record({
      value_of_root(m.claimed_root),
      Value::u64(m.interaction_count),
      Value::u64(m.total_token_in),
      Value::u64(m.total_token_out),
      Value::u64(m.first_timestamp_ms),
      Value::u64(m.last_timestamp_ms),
      Value::bytes(ByteView(m.advertisement)),
  });
}

std::optional<CertifiedMetadata> metadata_from(const Value& v) {
  if (!v.is_record() || v.items().size() != 7) return std::nullopt;
  const auto& f = v.items();
  auto root = root_from(f[0]);
  if (!root || !f[1].is_u64() || !f[2].is_u64() || !f[3].is_u64() || !f[4].is_u64() ||
      !f[5].is_u64() || !f[6].is_bytes()) {
    return std::nullopt;
  }
  CertifiedMetadata m;
  m.claimed_root = *root;
  m.interaction_count = f[1].as_u64();
  m.total_token_in = f[2].as_u64();
  m.total_token_out = f[3].as_u64();
  m.first_timestamp_ms = f[4].as_u64();
  m.last_timestamp_ms = f[5].as_u64();
  m.advertisement = f[6].as_bytes();
  return m;
}

Value value_of_draft(const ListingDraft& d) {
  return Value::record({
      value_of_cert(d.seller_cert),
      Value::u64(d.price),
      value_of_metadata(d.metadata),
      Value::u64(d.resale_allowed ? 1 : 0),
      Value::bytes(d.seller_endpoint),
      Value::bytes(d.encrypted_artifact_hash.view()),
  });
}

std::optional<ListingDraft> draft_from(const Value& v) {
  if (!v.is_record() || v.items().size() != 6) return std::nullopt;
  const auto& f = v.items();
  auto cert = cert_from(f[0]);
  auto meta = metadata_from(f[2]);
  auto hash = digest_from(f[5]);
  if (!cert || !f[1].is_u64() || !meta || !f[3].is_u64() || !f[4].is_bytes() || !hash) {
    return std::nullopt;
  }
  ListingDraft d;
  d.seller_cert = *cert;
  d.price = f[1].as_u64();
  d.metadata = *meta;
  d.resale_allowed = f[3].as_u64() == 1;
  d.seller_endpoint = to_string(ByteView(f[4].as_bytes()));
  d.encrypted_artifact_hash = *hash;
  return d;
}

enum class EventKind : uint64_t {
  PlatformInit = 1,
  AccountOpened = 2,
  Deposited = 3,
  GangCreated = 4,
  SlotReserved = 5,
  MemberRegistered = 6,
  VulnerabilityPublished = 7,
  ListingPosted = 8,
  ListingCancelled = 9,
  FundsLocked = 10,
  ReceiptAccepted = 11,
  TradeDisputed = 12,
  TradeResolved = 13,
  TradeTimeoutRefunded = 14,
  TokenRedeemed = 15,
  ReviewSubmitted = 16,
  AnchorRecorded = 17,
};

uint64_t wall_clock_ms() {
  return static_cast<uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                   std::chrono::system_clock::now().time_since_epoch())
                                   .count());
}

}  // namespace

struct Platform::Event {
  uint64_t kind = 0;
  uint64_t at_ms = 0;
  Value payload = Value::record({});

  Bytes encode() const {
    return Value::record({Value::u64(kind), Value::u64(at_ms), payload}).encode();
  }
};

// ---------------------------------------------------------------------------

Platform::Platform(Config config, Journal journal)
    : platform_key_(std::move(config.platform_key)),
      vendor_root_(config.vendor_root),
      clock_(config.clock ? std::move(config.clock) : enclave::Clock(wall_clock_ms)),
      rng_(std::move(config.rng)),
      lock_timeout_ms_(config.lock_timeout_ms),
      reputation_params_(config.reputation),
      journal_(std::move(journal)) {}

Result<Platform> Platform::create(Config config) {
  using R = Result<Platform>;
  Journal journal;
  if (!config.journal_path.empty()) {
    Result<Journal> opened = Journal::open(config.journal_path);
    if (!opened.ok()) return R::failure(opened.error());
    journal = std::move(opened).take();
  }

  Platform platform(std::move(config), std::move(journal));

  bool fresh = platform.journal_.recovered().empty();
  for (const Bytes& record : platform.journal_.recovered()) {
    Result<Event> event = platform.decode_event(ByteView(record));
    if (!event.ok()) return R::failure("journal replay: " + event.error());
    if (event.value().kind == static_cast<uint64_t>(EventKind::PlatformInit)) {
      const Value& p = event.value().payload;
      if (!p.is_record() || p.items().size() != 2) return R::failure("journal replay: bad init");
      auto ppub = pub_from(p.items()[0]);
      auto vpub = pub_from(p.items()[1]);
      if (!ppub || !vpub || *ppub != platform.platform_key_.public_id() ||
          *vpub != platform.vendor_root_) {
        return R::failure("journal belongs to a different platform identity");
      }
      continue;
    }
    platform.apply(event.value());
  }

  if (fresh && platform.journal_.persistent()) {
    Event init{static_cast<uint64_t>(EventKind::PlatformInit), platform.now_ms(),
               Value::record({Value::bytes(platform.platform_key_.public_id().view()),
                              Value::bytes(platform.vendor_root_.view())})};
    Status appended = platform.journal_.append(ByteView(init.encode()));
    if (!appended.ok()) return R::failure(appended.error());
  }

  return platform;
}

uint64_t Platform::now_ms() const {
  return clock_();
}

Result<Platform::Event> Platform::decode_event(ByteView bytes) const {
  using R = Result<Event>;
  auto value = Value::decode(bytes);
  if (!value || !value->is_record() || value->items().size() != 3 ||
      !value->items()[0].is_u64() || !value->items()[1].is_u64()) {
    return R::failure("undecodable journal record");
  }
  Event event;
  event.kind = value->items()[0].as_u64();
  event.at_ms = value->items()[1].as_u64();
  event.payload = value->items()[2];
  return event;
}

Status Platform::commit(const Event& event) {
  Status appended = journal_.append(ByteView(event.encode()));
  if (!appended.ok()) return appended;
  apply(event);
  return Status();
}

void Platform::credit(const PublicIdentity& account, uint64_t amount, const std::string& cause,
                      uint64_t trade_id) {
  balances_[account] += amount;
  balance_audit_.push_back(BalanceChange{account, static_cast<int64_t>(amount), cause, trade_id});
}

void Platform::debit(const PublicIdentity& account, uint64_t amount, const std::string& cause,
                     uint64_t trade_id) {
  balances_[account] -= amount;
  balance_audit_.push_back(BalanceChange{account, -static_cast<int64_t>(amount), cause, trade_id});
}

gang::GangDirectory* Platform::find_gang(const Digest& gang_id) {
  for (auto& [id, dir] : gangs_) {
    if (id == gang_id) return &dir;
  }
  return nullptr;
}

const gang::GangDirectory* Platform::find_gang(const Digest& gang_id) const {
  for (const auto& [id, dir] : gangs_) {
    if (id == gang_id) return &dir;
  }
  return nullptr;
}

std::optional<Digest> Platform::owner_seed_hash_of(const PublicIdentity& agent) const {
  auto it = owner_seeds_.find(agent);
  if (it == owner_seeds_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// Apply: deterministic state mutation from a journaled event.

void Platform::apply(const Event& event) {
  const Value& p = event.payload;
  switch (static_cast<EventKind>(event.kind)) {
    case EventKind::PlatformInit:
      break;
    case EventKind::AccountOpened: {
      auto pub = pub_from(p);
      if (pub) balances_.emplace(*pub, 0);
      break;
    }
    case EventKind::Deposited: {
      auto pub = pub_from(p.items()[0]);
      uint64_t amount = p.items()[1].as_u64();
      if (!pub) break;
      balances_[*pub] += amount;
      total_deposits_ += amount;
      balance_audit_.push_back(
          BalanceChange{*pub, static_cast<int64_t>(amount), "deposit", 0});
      break;
    }
    case EventKind::GangCreated: {
      auto tmpl = gang::template_from_value(p);
      if (tmpl) gangs_.emplace_back(tmpl->gang_id(), gang::GangDirectory(*tmpl));
      break;
    }
    case EventKind::SlotReserved: {
      auto gid = digest_from(p.items()[0]);
      uint64_t slot = p.items()[1].as_u64();
      const Bytes& nonce_bytes = p.items()[2].as_bytes();
      bool rereg = p.items()[3].as_u64() == 1;
      if (!gid) break;
      gang::GangDirectory* dir = find_gang(*gid);
      if (!dir) break;
      std::array<uint8_t, 16> nonce{};
      std::copy(nonce_bytes.begin(), nonce_bytes.end(), nonce.begin());
      dir->apply_reserve(slot, nonce, rereg);
      break;
    }
    case EventKind::MemberRegistered: {
      auto gid = digest_from(p.items()[0]);
      uint64_t slot = p.items()[1].as_u64();
      auto report = report_from(p.items()[2]);
      if (!gid || !report) break;
      gang::GangDirectory* dir = find_gang(*gid);
      if (!dir) break;
      dir->apply_registration(slot, *report, event.at_ms, platform_key_);
      owner_seeds_[report->agent_public] = report->measurement.owner_seed_hash;
      break;
    }
    case EventKind::VulnerabilityPublished: {
      VulnerabilityEntry entry;
      entry.position = vulnerabilities_.size();
      entry.affected_version = p.items()[0].as_u64();
      entry.note = to_string(ByteView(p.items()[1].as_bytes()));
      entry.published_at_ms = event.at_ms;
      auto sig = sig_from(p.items()[2]);
      if (sig) entry.platform_signature = *sig;
      vulnerabilities_.push_back(std::move(entry));
      break;
    }
    case EventKind::ListingPosted: {
      uint64_t listing_id = p.items()[0].as_u64();
      auto draft = draft_from(p.items()[1]);
      if (!draft) break;
      listings_[listing_id] = TradeListing{listing_id, std::move(*draft)};
      Trade trade;
      trade.trade_id = listing_id;
      trade.stage = TradeStage::Posted;
      trade.transitions.emplace_back(TradeStage::Posted, event.at_ms);
      trades_[listing_id] = std::move(trade);
      next_listing_id_ = std::max(next_listing_id_, listing_id + 1);
      break;
    }
    case EventKind::ListingCancelled: {
      uint64_t id = p.as_u64();
      Trade& trade = trades_[id];
      trade.stage = TradeStage::Cancelled;
      trade.transitions.emplace_back(TradeStage::Cancelled, event.at_ms);
      break;
    }
    case EventKind::FundsLocked: {
      uint64_t id = p.items()[0].as_u64();
      auto buyer = pub_from(p.items()[1]);
      uint64_t amount = p.items()[2].as_u64();
      std::string key = to_string(ByteView(p.items()[3].as_bytes()));
      if (!buyer) break;
      Trade& trade = trades_[id];
      debit(*buyer, amount, "lock", id);
      trade.stage = TradeStage::Locked;
      trade.buyer = *buyer;
      trade.escrow_amount = amount;
      trade.transitions.emplace_back(TradeStage::Locked, event.at_ms);
      lock_idempotency_[key] = id;
      break;
    }
    case EventKind::ReceiptAccepted: {
      uint64_t id = p.items()[0].as_u64();
      auto receipt = receipt_from(p.items()[1]);
      if (!receipt) break;
      Trade& trade = trades_[id];
      trade.receipt = *receipt;
      trade.stage = TradeStage::Delivered;
      trade.transitions.emplace_back(TradeStage::Delivered, event.at_ms);
      trade.stage = TradeStage::Settled;
      trade.transitions.emplace_back(TradeStage::Settled, event.at_ms);
      const PublicIdentity& seller = listings_[id].draft.seller_cert.agent_public;
      credit(seller, trade.escrow_amount, "settle_receipt", id);
      break;
    }
    case EventKind::TradeDisputed: {
      uint64_t id = p.items()[0].as_u64();
      Trade& trade = trades_[id];
      trade.stage = TradeStage::Disputed;
      trade.transitions.emplace_back(TradeStage::Disputed, event.at_ms);
      break;
    }
    case EventKind::TradeResolved: {
      uint64_t id = p.items()[0].as_u64();
      bool settle = p.items()[1].as_u64() == 1;
      Trade& trade = trades_[id];
      if (settle) {
        trade.stage = TradeStage::Settled;
        trade.transitions.emplace_back(TradeStage::Settled, event.at_ms);
        credit(listings_[id].draft.seller_cert.agent_public, trade.escrow_amount,
               "settle_arbiter", id);
      } else {
        trade.stage = TradeStage::Refunded;
        trade.transitions.emplace_back(TradeStage::Refunded, event.at_ms);
        credit(trade.buyer, trade.escrow_amount, "refund_arbiter", id);
      }
      break;
    }
    case EventKind::TradeTimeoutRefunded: {
      uint64_t id = p.as_u64();
      Trade& trade = trades_[id];
      trade.stage = TradeStage::Refunded;
      trade.transitions.emplace_back(TradeStage::Refunded, event.at_ms);
      credit(trade.buyer, trade.escrow_amount, "refund_timeout", id);
      break;
    }
    case EventKind::TokenRedeemed: {
      auto token = token_from(p);
      if (!token) break;
      redeemed_[{token->seller.key, token->trade_id}] = *token;
      break;
    }
    case EventKind::ReviewSubmitted: {
      auto seller = pub_from(p.items()[0]);
      auto buyer = pub_from(p.items()[2]);
      if (!seller || !buyer) break;
      Review review;
      review.seller = *seller;
      review.trade_id = p.items()[1].as_u64();
      review.buyer = *buyer;
      review.rating = static_cast<uint32_t>(p.items()[3].as_u64());
      review.comment = to_string(ByteView(p.items()[4].as_bytes()));
      review.stake = p.items()[5].as_u64();
      review.off_platform = p.items()[6].as_u64() == 1;
      review.at_ms = event.at_ms;
      reviews_.push_back(std::move(review));
      break;
    }
    case EventKind::AnchorRecorded: {
      auto commitment = anchor_from(p);
      if (!commitment) break;
      AnchorEntry entry;
      entry.position = anchors_.size();
      entry.commitment = *commitment;
      entry.received_at_ms = event.at_ms;
      Bytes counter = Value::record({Value::u64(entry.position), Value::u64(entry.received_at_ms),
                                     Value::bytes(ByteView(ledger::anchor_payload(
                                         commitment->agent, commitment->root_at,
                                         commitment->wallclock_ms)))})
                          .encode();
      entry.platform_countersignature =
          platform_key_.sign(DomainTag::Bulletin, ByteView(counter));
      anchors_.push_back(std::move(entry));
      break;
    }
  }
}

// ---------------------------------------------------------------------------
// Credit ledger.

Status Platform::open_account(const PublicIdentity& account) {
  std::lock_guard lock(*mutex_);
  if (balances_.count(account)) return Status::failure("account already open");
  return commit(Event{static_cast<uint64_t>(EventKind::AccountOpened), now_ms(),
                      Value::bytes(account.view())});
}

Status Platform::deposit(const PublicIdentity& account, uint64_t amount) {
  std::lock_guard lock(*mutex_);
  if (amount == 0) return Status::failure("deposit amount must be positive");
  return commit(Event{static_cast<uint64_t>(EventKind::Deposited), now_ms(),
                      Value::record({Value::bytes(account.view()), Value::u64(amount)})});
}

Result<uint64_t> Platform::balance_of(const PublicIdentity& account) const {
  std::lock_guard lock(*mutex_);
  auto it = balances_.find(account);
  if (it == balances_.end()) return Result<uint64_t>::failure("unknown account");
  return it->second;
}

// ---------------------------------------------------------------------------
// Gang lifecycle.

Result<Digest> Platform::create_gang(const gang::GangTemplate& tmpl) {
  std::lock_guard lock(*mutex_);
  using R = Result<Digest>;
  if (tmpl.task_description.empty()) return R::failure("template task description is empty");
  if (tmpl.code_reference.empty()) return R::failure("template code reference is empty");
  Digest id = tmpl.gang_id();
  if (find_gang(id)) return R::failure("duplicate gang id");
  Status committed = commit(
      Event{static_cast<uint64_t>(EventKind::GangCreated), now_ms(), tmpl.canonical_fields()});
  if (!committed.ok()) return R::failure(committed.error());
  return id;
}

std::vector<gang::GangTemplate> Platform::gangs() const {
  std::lock_guard lock(*mutex_);
  std::vector<gang::GangTemplate> out;
  for (const auto& [id, dir] : gangs_) out.push_back(dir.tmpl());
  return out;
}

Result<gang::GangTemplate> Platform::gang_template(const Digest& gang_id) const {
  std::lock_guard lock(*mutex_);
  const gang::GangDirectory* dir = find_gang(gang_id);
  if (!dir) return Result<gang::GangTemplate>::failure("unknown gang");
  return dir->tmpl();
}

Result<gang::SlotReservation> Platform::reserve_slot(const Digest& gang_id) {
  std::lock_guard lock(*mutex_);
  using R = Result<gang::SlotReservation>;
  gang::GangDirectory* dir = find_gang(gang_id);
  if (!dir) return R::failure("unknown gang");
  gang::SlotReservation reservation{dir->peek_slot(), rng_.bytes16()};
  Status committed = commit(Event{
      static_cast<uint64_t>(EventKind::SlotReserved), now_ms(),
      Value::record({Value::bytes(gang_id.view()), Value::u64(reservation.slot_id),
                     Value::bytes(ByteView(reservation.nonce.data(), reservation.nonce.size())),
                     Value::u64(0)})});
  if (!committed.ok()) return R::failure(committed.error());
  return reservation;
}

Result<gang::SlotReservation> Platform::reserve_reregistration(const Digest& gang_id,
                                                               uint64_t slot_id) {
  std::lock_guard lock(*mutex_);
  using R = Result<gang::SlotReservation>;
  gang::GangDirectory* dir = find_gang(gang_id);
  if (!dir) return R::failure("unknown gang");
  if (dir->slot_history(slot_id).empty()) {
    return R::failure("re-registration for an unregistered slot");
  }
  gang::SlotReservation reservation{slot_id, rng_.bytes16()};
  Status committed = commit(Event{
      static_cast<uint64_t>(EventKind::SlotReserved), now_ms(),
      Value::record({Value::bytes(gang_id.view()), Value::u64(slot_id),
                     Value::bytes(ByteView(reservation.nonce.data(), reservation.nonce.size())),
                     Value::u64(1)})});
  if (!committed.ok()) return R::failure(committed.error());
  return reservation;
}

Result<gang::MembershipCertificate> Platform::register_member(
    const Digest& gang_id, uint64_t slot_id, const enclave::AttestationReport& report) {
  std::lock_guard lock(*mutex_);
  using R = Result<gang::MembershipCertificate>;
  gang::GangDirectory* dir = find_gang(gang_id);
  if (!dir) return R::failure("unknown gang");
  Status valid = dir->validate_registration(slot_id, report, vendor_root_);
  if (!valid.ok()) return R::failure(valid.error());
  Status committed = commit(Event{static_cast<uint64_t>(EventKind::MemberRegistered), now_ms(),
                                  Value::record({Value::bytes(gang_id.view()),
                                                 Value::u64(slot_id), value_of_report(report)})});
  if (!committed.ok()) return R::failure(committed.error());
  return dir->slot_history(slot_id).back().certificate;
}

Result<std::vector<gang::MemberRecord>> Platform::members(const Digest& gang_id) const {
  std::lock_guard lock(*mutex_);
  const gang::GangDirectory* dir = find_gang(gang_id);
  if (!dir) return Result<std::vector<gang::MemberRecord>>::failure("unknown gang");
  std::vector<gang::MemberRecord> out;
  for (uint64_t slot = 0; slot < dir->next_slot(); ++slot) {
    for (const gang::MemberRecord& record : dir->slot_history(slot)) out.push_back(record);
  }
  return out;
}

Result<Bytes> Platform::member_list_document(const Digest& gang_id) const {
  std::lock_guard lock(*mutex_);
  const gang::GangDirectory* dir = find_gang(gang_id);
  if (!dir) return Result<Bytes>::failure("unknown gang");
  return dir->member_list_document(platform_key_);
}

bool Platform::verify_membership(const gang::MembershipCertificate& cert) const {
  std::lock_guard lock(*mutex_);
  if (!gang::verify_certificate(cert, platform_key_.public_id())) return false;
  const gang::GangDirectory* dir = find_gang(cert.gang_id);
  if (!dir) return false;
  if (dir->certificate_status(cert) != gang::GangDirectory::CertStatus::Active) return false;
  for (const VulnerabilityEntry& v : vulnerabilities_) {
    if (cert.security_version <= v.affected_version) return false;
  }
  return true;
}

Status Platform::publish_vulnerability(uint64_t affected_version, const std::string& note,
                                       const Signature& operator_signature) {
  std::lock_guard lock(*mutex_);
  Bytes payload = vulnerability_payload(affected_version, note);
  if (!crypto::verify(platform_key_.public_id(), DomainTag::Bulletin, ByteView(payload),
                      operator_signature)) {
    return Status::failure("vulnerability bulletin requires the platform operator signature");
  }
  return commit(Event{static_cast<uint64_t>(EventKind::VulnerabilityPublished), now_ms(),
                      Value::record({Value::u64(affected_version), Value::bytes(note),
                                     value_of_sig(operator_signature)})});
}

std::vector<VulnerabilityEntry> Platform::vulnerabilities() const {
  std::lock_guard lock(*mutex_);
  return vulnerabilities_;
}

// ---------------------------------------------------------------------------
// Listings and trades.

Result<uint64_t> Platform::post_listing(const ListingDraft& draft) {
  std::lock_guard lock(*mutex_);
  using R = Result<uint64_t>;

  const gang::MembershipCertificate& cert = draft.seller_cert;
  if (!gang::verify_certificate(cert, platform_key_.public_id())) {
    return R::failure("seller certificate signature does not verify");
  }
  const gang::GangDirectory* dir = find_gang(cert.gang_id);
  if (!dir) return R::failure("seller certificate names an unknown gang");
  auto status = dir->certificate_status(cert);
  if (status == gang::GangDirectory::CertStatus::Superseded) {
    return R::failure("seller certificate is superseded");
  }
  if (status == gang::GangDirectory::CertStatus::Unknown) {
    return R::failure("seller certificate is not in the member directory");
  }

  bool is_request = draft.metadata.advertisement.empty();
  if (!is_request) {
    const gang::MemberRecord* member = nullptr;
    for (const gang::MemberRecord& record : dir->slot_history(cert.slot_id)) {
      if (record.certificate == cert) member = &record;
    }
    if (!member) return R::failure("seller certificate is not in the member directory");
    ledger::GenesisInputs genesis{
        enclave::gang_config_hash(member->measurement.value, dir->tmpl().model_provider),
        cert.agent_public};
    ledger::VerificationReport report = ledger::verify_artifact_bytes(
        ByteView(draft.metadata.advertisement), draft.metadata.claimed_root, genesis);
    if (!report.ok()) return R::failure("advertisement artifact does not verify");
  } else if (draft.metadata.claimed_root.length != 0 || draft.metadata.interaction_count != 0) {
    return R::failure("buy-side request must carry empty certified metadata");
  }

  uint64_t listing_id = next_listing_id_;
  Status committed = commit(Event{static_cast<uint64_t>(EventKind::ListingPosted), now_ms(),
                                  Value::record({Value::u64(listing_id), value_of_draft(draft)})});
  if (!committed.ok()) return R::failure(committed.error());
  return listing_id;
}

std::vector<TradeListing> Platform::listings() const {
  std::lock_guard lock(*mutex_);
  std::vector<TradeListing> out;
  for (const auto& [id, listing] : listings_) out.push_back(listing);
  return out;
}

Result<TradeListing> Platform::listing(uint64_t listing_id) const {
  std::lock_guard lock(*mutex_);
  auto it = listings_.find(listing_id);
  if (it == listings_.end()) return Result<TradeListing>::failure("unknown listing");
  return it->second;
}

Result<Trade> Platform::trade(uint64_t trade_id) const {
  std::lock_guard lock(*mutex_);
  auto it = trades_.find(trade_id);
  if (it == trades_.end()) return Result<Trade>::failure("unknown trade");
  return it->second;
}

Status Platform::cancel_listing(uint64_t listing_id) {
  std::lock_guard lock(*mutex_);
  auto it = trades_.find(listing_id);
  if (it == trades_.end()) return Status::failure("unknown listing");
  if (it->second.stage != TradeStage::Posted) {
    return Status::failure("only posted listings can be cancelled");
  }
  return commit(Event{static_cast<uint64_t>(EventKind::ListingCancelled), now_ms(),
                      Value::u64(listing_id)});
}

Result<uint64_t> Platform::lock_funds(uint64_t listing_id, const PublicIdentity& buyer,
                                      uint64_t amount, const std::string& idempotency_key,
                                      const Signature& buyer_signature) {
  std::lock_guard lock(*mutex_);
  using R = Result<uint64_t>;

  std::string scoped_key = to_hex(buyer.view()) + ":" + idempotency_key;
  auto existing = lock_idempotency_.find(scoped_key);
  if (existing != lock_idempotency_.end()) return existing->second;

  auto listing_it = listings_.find(listing_id);
  if (listing_it == listings_.end()) return R::failure("unknown listing");
  auto trade_it = trades_.find(listing_id);
  if (trade_it->second.stage != TradeStage::Posted) {
    return R::failure("listing already locked");
  }
  if (listing_it->second.draft.metadata.advertisement.empty()) {
    return R::failure("buy-side requests cannot be locked");
  }
  if (amount != listing_it->second.draft.price) {
    return R::failure("amount must equal the listing price");
  }
  Bytes payload = lock_payload(listing_id, amount, idempotency_key);
  if (!crypto::verify(buyer, DomainTag::Account, ByteView(payload), buyer_signature)) {
    return R::failure("buyer authorization signature does not verify");
  }
  auto balance = balances_.find(buyer);
  if (balance == balances_.end()) return R::failure("unknown buyer account");
  if (balance->second < amount) return R::failure("insufficient funds");

  Status committed = commit(
      Event{static_cast<uint64_t>(EventKind::FundsLocked), now_ms(),
            Value::record({Value::u64(listing_id), Value::bytes(buyer.view()),
                           Value::u64(amount), Value::bytes(scoped_key)})});
  if (!committed.ok()) return R::failure(committed.error());
  return listing_id;
}

Status Platform::validate_receipt(uint64_t trade_id, const Trade& trade,
                                  const enclave::DeliveryReceipt& receipt,
                                  const std::optional<enclave::PurchaseToken>& token) const {
  const TradeListing& listing = listings_.at(trade_id);
  const PublicIdentity& seller = listing.draft.seller_cert.agent_public;
  if (!enclave::verify_receipt(receipt, seller)) {
    return Status::failure("receipt signature does not verify under the seller identity");
  }
  if (receipt.trade_id != trade_id) return Status::failure("receipt bound to a different trade");
  if (receipt.buyer != trade.buyer) return Status::failure("receipt bound to a different buyer");
  if (receipt.artifact_hash != listing.draft.encrypted_artifact_hash) {
    return Status::failure("receipt artifact hash does not match the listing");
  }
  if (receipt.referenced_root != listing.draft.metadata.claimed_root) {
    return Status::failure("receipt references a different anchored root");
  }
  if (token) {
    if (!enclave::verify_token(*token)) return Status::failure("purchase token does not verify");
    if (token->seller != seller || token->trade_id != trade_id || token->buyer != trade.buyer) {
      return Status::failure("purchase token does not match the trade");
    }
  }
  return Status();
}

Result<TradeStage> Platform::submit_receipt(uint64_t trade_id,
                                            const enclave::DeliveryReceipt& receipt,
                                            std::optional<enclave::PurchaseToken> token) {
  std::lock_guard lock(*mutex_);
  using R = Result<TradeStage>;
  auto it = trades_.find(trade_id);
  if (it == trades_.end()) return R::failure("unknown trade");
  Trade& trade = it->second;

  if (trade.stage == TradeStage::Settled && trade.receipt &&
      trade.receipt->enclave_signature == receipt.enclave_signature) {
    return TradeStage::Settled;  // replay of a settled receipt is a no-op
  }
  if (trade.stage != TradeStage::Locked && trade.stage != TradeStage::Delivered) {
    return R::failure("trade is not in a lockable-settlement state: " +
                      std::string(stage_name(trade.stage)));
  }
  Status valid = validate_receipt(trade_id, trade, receipt, token);
  if (!valid.ok()) return R::failure(valid.error());

  std::vector<Value> payload{Value::u64(trade_id), value_of_receipt(receipt)};
  Status committed = commit(Event{static_cast<uint64_t>(EventKind::ReceiptAccepted), now_ms(),
                                  Value::record(std::move(payload))});
  if (!committed.ok()) return R::failure(committed.error());
  return trades_.at(trade_id).stage;
}

Status Platform::dispute(uint64_t trade_id, const PublicIdentity& party) {
  std::lock_guard lock(*mutex_);
  auto it = trades_.find(trade_id);
  if (it == trades_.end()) return Status::failure("unknown trade");
  if (it->second.stage != TradeStage::Locked) {
    return Status::failure("only locked trades can be disputed");
  }
  const PublicIdentity& seller = listings_.at(trade_id).draft.seller_cert.agent_public;
  if (party != it->second.buyer && party != seller) {
    return Status::failure("dispute party must be the buyer or the seller");
  }
  return commit(Event{static_cast<uint64_t>(EventKind::TradeDisputed), now_ms(),
                      Value::record({Value::u64(trade_id), Value::bytes(party.view())})});
}

Status Platform::resolve(uint64_t trade_id, bool settle, const Signature& arbiter_signature) {
  std::lock_guard lock(*mutex_);
  auto it = trades_.find(trade_id);
  if (it == trades_.end()) return Status::failure("unknown trade");
  if (it->second.stage != TradeStage::Disputed) {
    return Status::failure("only disputed trades can be resolved");
  }
  Bytes payload = resolve_payload(trade_id, settle);
  if (!crypto::verify(platform_key_.public_id(), DomainTag::Bulletin, ByteView(payload),
                      arbiter_signature)) {
    return Status::failure("resolution requires the arbiter signature");
  }
  return commit(Event{static_cast<uint64_t>(EventKind::TradeResolved), now_ms(),
                      Value::record({Value::u64(trade_id), Value::u64(settle ? 1 : 0)})});
}

Status Platform::refund_timeout(uint64_t trade_id) {
  std::lock_guard lock(*mutex_);
  auto it = trades_.find(trade_id);
  if (it == trades_.end()) return Status::failure("unknown trade");
  const Trade& trade = it->second;
  if (trade.stage != TradeStage::Locked) {
    return Status::failure("only locked trades can be refunded on timeout");
  }
  uint64_t locked_at = 0;
  for (const auto& [stage, at] : trade.transitions) {
    if (stage == TradeStage::Locked) locked_at = at;
  }
  if (now_ms() < locked_at + lock_timeout_ms_) {
    return Status::failure("lock timeout has not elapsed");
  }
  return commit(Event{static_cast<uint64_t>(EventKind::TradeTimeoutRefunded), now_ms(),
                      Value::u64(trade_id)});
}

// ---------------------------------------------------------------------------
// Reviews and reputation.

Status Platform::redeem_token(const enclave::PurchaseToken& token) {
  std::lock_guard lock(*mutex_);
  if (!enclave::verify_token(token)) {
    return Status::failure("purchase token signature does not verify");
  }
  if (redeemed_.count({token.seller.key, token.trade_id})) {
    return Status::failure("token already redeemed");
  }
  return commit(Event{static_cast<uint64_t>(EventKind::TokenRedeemed), now_ms(),
                      value_of_token(token)});
}

Status Platform::submit_review(const PublicIdentity& seller, uint64_t trade_id,
                               const PublicIdentity& buyer, uint32_t rating,
                               const std::string& comment, const Signature& buyer_signature) {
  std::lock_guard lock(*mutex_);
  if (rating < 1 || rating > 5) return Status::failure("rating must be in 1..5");
  Bytes payload = review_payload(seller, trade_id, rating, comment);
  if (!crypto::verify(buyer, DomainTag::Review, ByteView(payload), buyer_signature)) {
    return Status::failure("review signature does not verify under the buyer identity");
  }
  for (const Review& r : reviews_) {
    if (r.seller == seller && r.trade_id == trade_id) {
      return Status::failure("trade already reviewed");
    }
  }

  // Eligibility: verified buyer of a platform-settled trade, or holder of a
  // redeemed purchase token for this trade.
  uint64_t stake = 0;
  bool off_platform = false;
  auto trade_it = trades_.find(trade_id);
  bool platform_eligible =
      trade_it != trades_.end() && trade_it->second.stage == TradeStage::Settled &&
      trade_it->second.buyer == buyer &&
      listings_.at(trade_id).draft.seller_cert.agent_public == seller;
  if (platform_eligible) {
    stake = trade_it->second.escrow_amount;
  } else {
    auto redeemed = redeemed_.find({seller.key, trade_id});
    if (redeemed == redeemed_.end() || redeemed->second.buyer != buyer) {
      return Status::failure("no review eligibility for this trade");
    }
    stake = reputation_params_.off_platform_stake;
    off_platform = true;
  }

  return commit(Event{static_cast<uint64_t>(EventKind::ReviewSubmitted), now_ms(),
                      Value::record({Value::bytes(seller.view()), Value::u64(trade_id),
                                     Value::bytes(buyer.view()), Value::u64(rating),
                                     Value::bytes(comment), Value::u64(stake),
                                     Value::u64(off_platform ? 1 : 0)})});
}

std::vector<Review> Platform::reviews_of(const PublicIdentity& seller) const {
  std::lock_guard lock(*mutex_);
  std::vector<Review> out;
  for (const Review& r : reviews_) {
    if (r.seller == seller) out.push_back(r);
  }
  return out;
}

ReputationScore Platform::reputation(const PublicIdentity& seller) const {
  std::lock_guard lock(*mutex_);
  uint64_t now = now_ms();
  std::optional<Digest> seller_owner = owner_seed_hash_of(seller);

  std::map<PublicIdentity, uint32_t> reviews_per_buyer;
  double numerator = 0;
  double denominator = 0;
  uint64_t eligible = 0;

  for (const Review& r : reviews_) {
    if (r.seller != seller) continue;
    std::optional<Digest> buyer_owner = owner_seed_hash_of(r.buyer);
    if (seller_owner && buyer_owner && *seller_owner == *buyer_owner) continue;  // self-trade

    uint32_t nth = ++reviews_per_buyer[r.buyer];
    double repeat = nth > reputation_params_.repeat_free ? reputation_params_.repeat_discount : 1.0;
    double age_days = now > r.at_ms ? double(now - r.at_ms) / 86400000.0 : 0.0;
    double decay = std::exp(-std::log(2.0) * age_days / reputation_params_.half_life_days);
    double stake = double(std::min(r.stake, reputation_params_.stake_cap));
    double weight = decay * stake * repeat;

    numerator += weight * (double(r.rating) / 5.0);
    denominator += weight;
    ++eligible;
  }

  if (eligible == 0 || denominator == 0.0) return ReputationScore{std::nullopt, eligible};
  return ReputationScore{numerator / denominator, eligible};
}

// ---------------------------------------------------------------------------
// Anchor bulletin.

Result<uint64_t> Platform::record_anchor(const ledger::AnchorCommitment& commitment) {
  std::lock_guard lock(*mutex_);
  using R = Result<uint64_t>;
  if (!ledger::verify_anchor(commitment)) {
    return R::failure("anchor signature does not verify");
  }
  for (auto it = anchors_.rbegin(); it != anchors_.rend(); ++it) {
    if (it->commitment.agent == commitment.agent) {
      if (commitment.wallclock_ms < it->commitment.wallclock_ms) {
        return R::failure("anchor wallclock regresses against the previous anchor");
      }
      break;
    }
  }
  Status committed = commit(Event{static_cast<uint64_t>(EventKind::AnchorRecorded), now_ms(),
                                  value_of_anchor(commitment)});
  if (!committed.ok()) return R::failure(committed.error());
  return anchors_.back().position;
}

std::vector<AnchorEntry> Platform::anchors(std::optional<PublicIdentity> agent) const {
  std::lock_guard lock(*mutex_);
  if (!agent) return anchors_;
  std::vector<AnchorEntry> out;
  for (const AnchorEntry& entry : anchors_) {
    if (entry.commitment.agent == *agent) out.push_back(entry);
  }
  return out;
}

AnchorWindow Platform::classify_anchor(const AnchorEntry& entry) const {
  std::lock_guard lock(*mutex_);
  // Latest registered security version of the anchoring agent.
  std::optional<uint64_t> version;
  for (const auto& [gid, dir] : gangs_) {
    for (uint64_t slot = 0; slot < dir.next_slot(); ++slot) {
      for (const gang::MemberRecord& record : dir.slot_history(slot)) {
        if (record.certificate.agent_public == entry.commitment.agent) {
          version = std::max(version.value_or(0), record.certificate.security_version);
        }
      }
    }
  }
  if (!version) return AnchorWindow::Unaffected;

  std::optional<uint64_t> earliest;
  for (const VulnerabilityEntry& v : vulnerabilities_) {
    if (*version <= v.affected_version) {
      earliest = earliest ? std::min(*earliest, v.published_at_ms) : v.published_at_ms;
    }
  }
  if (!earliest) return AnchorWindow::Unaffected;
  return entry.received_at_ms < *earliest ? AnchorWindow::PreWindowCredible
                                          : AnchorWindow::PostWindow;
}

// ---------------------------------------------------------------------------
// Lineage.

LineageReport Platform::verify_trace(const TraceManifest& manifest,
                                     std::optional<ledger::AnchoredRoot> current_root) const {
  std::lock_guard lock(*mutex_);
  LineageReport report;

  std::optional<uint64_t> owner_length;
  if (current_root) {
    owner_length = current_root->length;
  } else {
    for (auto it = anchors_.rbegin(); it != anchors_.rend(); ++it) {
      if (it->commitment.agent == manifest.owner) {
        owner_length = it->commitment.root_at.length;
        break;
      }
    }
  }

  std::vector<std::pair<uint64_t, uint64_t>> ranges;
  const crypto::PublicIdentity* expected_successor = nullptr;
  size_t inherited_seen = 0;

  for (size_t i = 0; i < manifest.entries.size(); ++i) {
    const TraceEntry& entry = manifest.entries[i];
    EntryVerdict verdict;
    verdict.index = i;
    switch (entry.kind) {
      case TraceEntry::Kind::SelfProduced: {
        verdict.kind = "self_produced";
        ++report.self_produced;
        if (entry.range_from >= entry.range_to) {
          verdict.detail = "empty or inverted range";
          break;
        }
        bool overlaps = false;
        for (const auto& [from, to] : ranges) {
          if (entry.range_from < to && from < entry.range_to) overlaps = true;
        }
        if (overlaps) {
          verdict.detail = "range overlaps an earlier self-produced range";
          break;
        }
        ranges.emplace_back(entry.range_from, entry.range_to);
        if (!owner_length) {
          verdict.detail = "no anchored root known to bound the range";
          break;
        }
        if (entry.range_to > *owner_length) {
          verdict.detail = "range exceeds the owner's anchored log length";
          break;
        }
        verdict.ok = true;
        break;
      }
      case TraceEntry::Kind::Purchased: {
        verdict.kind = "purchased";
        ++report.purchased;
        auto trade_it = trades_.find(entry.trade_id);
        if (trade_it == trades_.end()) {
          verdict.detail = "references an unknown trade";
          break;
        }
        const Trade& trade = trade_it->second;
        if (trade.stage != TradeStage::Settled) {
          verdict.detail = "references a trade that is not settled (" +
                           std::string(stage_name(trade.stage)) + ")";
          break;
        }
        if (trade.buyer != manifest.owner) {
          verdict.detail = "trade buyer is not the manifest owner";
          break;
        }
        const TradeListing& listing = listings_.at(entry.trade_id);
        if (listing.draft.seller_cert.agent_public != entry.seller) {
          verdict.detail = "seller does not match the listing";
          break;
        }
        if (!trade.receipt || trade.receipt->artifact_hash != entry.artifact_hash ||
            !(trade.receipt->referenced_root == entry.referenced_root)) {
          verdict.detail = "receipt does not match the claimed artifact";
          break;
        }
        verdict.ok = true;
        break;
      }
      case TraceEntry::Kind::Inherited: {
        verdict.kind = "inherited";
        ++report.inherited;
        ++inherited_seen;
        if (!enclave::verify_inheritance(entry.inheritance)) {
          verdict.detail = "inheritance signatures do not verify";
          break;
        }
        if (expected_successor && !(entry.inheritance.predecessor == *expected_successor)) {
          verdict.detail = "inheritance chain is not linked to the previous transfer";
          break;
        }
        expected_successor = &entry.inheritance.successor;
        verdict.ok = true;
        break;
      }
    }
    report.entries.push_back(std::move(verdict));
  }

  // The last transfer must hand the memory to the manifest owner.
  if (inherited_seen > 0 && expected_successor && !(*expected_successor == manifest.owner)) {
    for (auto it = report.entries.rbegin(); it != report.entries.rend(); ++it) {
      if (it->kind == "inherited") {
        it->ok = false;
        it->detail = "final successor is not the manifest owner";
        break;
      }
    }
  }

  report.accepted = !report.entries.empty() &&
                    std::all_of(report.entries.begin(), report.entries.end(),
                                [](const EntryVerdict& v) { return v.ok; });
  uint64_t ok_inherited = 0;
  for (const EntryVerdict& v : report.entries) {
    if (v.kind == "inherited" && v.ok) ++ok_inherited;
  }
  report.depth = 1 + ok_inherited;
  return report;
}

// ---------------------------------------------------------------------------
// Audit surface.

uint64_t Platform::total_deposits() const {
  std::lock_guard lock(*mutex_);
  return total_deposits_;
}

uint64_t Platform::total_balances() const {
  std::lock_guard lock(*mutex_);
  uint64_t sum = 0;
  for (const auto& [pub, balance] : balances_) sum += balance;
  return sum;
}

uint64_t Platform::total_escrow() const {
  std::lock_guard lock(*mutex_);
  uint64_t sum = 0;
  for (const auto& [id, trade] : trades_) {
    if (trade.stage == TradeStage::Locked || trade.stage == TradeStage::Delivered ||
        trade.stage == TradeStage::Disputed) {
      sum += trade.escrow_amount;
    }
  }
  return sum;
}

crypto::Digest Platform::state_fingerprint() const {
  std::lock_guard lock(*mutex_);
  std::vector<Value> accounts;
  for (const auto& [pub, balance] : balances_) {
    accounts.push_back(Value::record({Value::bytes(pub.view()), Value::u64(balance)}));
  }
  std::vector<Value> trades;
  for (const auto& [id, trade] : trades_) {
    std::vector<Value> transitions;
    for (const auto& [stage, at] : trade.transitions) {
      transitions.push_back(
          Value::record({Value::u64(static_cast<uint64_t>(stage)), Value::u64(at)}));
    }
    trades.push_back(Value::record({
        Value::u64(id),
        Value::u64(static_cast<uint64_t>(trade.stage)),
        Value::bytes(trade.buyer.view()),
        Value::u64(trade.escrow_amount),
        trade.receipt ? value_of_receipt(*trade.receipt) : Value::record({}),
        Value::list(std::move(transitions)),
    }));
  }
  std::vector<Value> gangs;
  for (const auto& [gid, dir] : gangs_) {
    std::vector<Value> members;
    for (uint64_t slot = 0; slot < dir.next_slot(); ++slot) {
      for (const gang::MemberRecord& record : dir.slot_history(slot)) {
        members.push_back(Value::record({value_of_cert(record.certificate),
                                         Value::u64(static_cast<uint64_t>(record.status))}));
      }
    }
    gangs.push_back(Value::record(
        {Value::bytes(gid.view()), Value::u64(dir.document_version()), Value::list(std::move(members))}));
  }
  std::vector<Value> reviews;
  for (const Review& r : reviews_) {
    reviews.push_back(Value::record({Value::bytes(r.seller.view()), Value::u64(r.trade_id),
                                     Value::bytes(r.buyer.view()), Value::u64(r.rating),
                                     Value::bytes(r.comment), Value::u64(r.at_ms),
                                     Value::u64(r.stake), Value::u64(r.off_platform ? 1 : 0)}));
  }
  std::vector<Value> anchor_items;
  for (const AnchorEntry& a : anchors_) {
    anchor_items.push_back(Value::record(
        {Value::u64(a.position), value_of_anchor(a.commitment), Value::u64(a.received_at_ms)}));
  }
  std::vector<Value> vuln_items;
  for (const VulnerabilityEntry& v : vulnerabilities_) {
    vuln_items.push_back(Value::record({Value::u64(v.position), Value::u64(v.affected_version),
                                        Value::bytes(v.note), Value::u64(v.published_at_ms)}));
  }
  std::vector<Value> redeemed_items;
  for (const auto& [key, token] : redeemed_) {
    redeemed_items.push_back(value_of_token(token));
  }
  std::vector<Value> listing_items;
  for (const auto& [id, listing] : listings_) {
    listing_items.push_back(Value::record({Value::u64(id), value_of_draft(listing.draft)}));
  }

  Bytes payload = Value::record({
                      Value::list(std::move(accounts)),
                      Value::u64(total_deposits_),
                      Value::list(std::move(listing_items)),
                      Value::list(std::move(trades)),
                      Value::list(std::move(gangs)),
                      Value::list(std::move(reviews)),
                      Value::list(std::move(anchor_items)),
                      Value::list(std::move(vuln_items)),
                      Value::list(std::move(redeemed_items)),
                  }).encode();
  return crypto::digest(DomainTag::Field, ByteView(payload));
}

Signature Platform::sign_resolution(uint64_t trade_id, bool settle) const {
  return platform_key_.sign(DomainTag::Bulletin, ByteView(resolve_payload(trade_id, settle)));
}

Signature Platform::sign_vulnerability(uint64_t affected_version, const std::string& note) const {
  return platform_key_.sign(DomainTag::Bulletin,
                            ByteView(vulnerability_payload(affected_version, note)));
}

}  // namespace memtrade::market
