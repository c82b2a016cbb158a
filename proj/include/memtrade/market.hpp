#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "memtrade/gang.hpp"
#include "memtrade/journal.hpp"

namespace memtrade::market {

enum class TradeStage : uint8_t {
  Posted = 0,
  Locked = 1,
  Delivered = 2,
  Settled = 3,
  Disputed = 4,
  Refunded = 5,
  Cancelled = 6,
};

std::string_view stage_name(TradeStage stage);

struct CertifiedMetadata {
  ledger::AnchoredRoot claimed_root;
  uint64_t interaction_count = 0;
  uint64_t total_token_in = 0;
  uint64_t total_token_out = 0;
  uint64_t first_timestamp_ms = 0;
  uint64_t last_timestamp_ms = 0;
  Bytes advertisement;  // artifact container with empty or partial selection
};

struct ListingDraft {
  gang::MembershipCertificate seller_cert;
  uint64_t price = 0;
  CertifiedMetadata metadata;
  bool resale_allowed = false;
  std::string seller_endpoint;
  crypto::Digest encrypted_artifact_hash;
};

struct TradeListing {
  uint64_t listing_id = 0;
  ListingDraft draft;
};

struct Trade {
  uint64_t trade_id = 0;  // equals listing_id: single-unit listings
  TradeStage stage = TradeStage::Posted;
  crypto::PublicIdentity buyer;
  uint64_t escrow_amount = 0;
  std::optional<enclave::DeliveryReceipt> receipt;
  std::vector<std::pair<TradeStage, uint64_t>> transitions;  // (stage, at_ms)
};

struct VulnerabilityEntry {
  uint64_t position = 0;
  uint64_t affected_version = 0;  // versions <= affected_version are vulnerable
  std::string note;
  uint64_t published_at_ms = 0;
  crypto::Signature platform_signature;
};

enum class AnchorWindow : uint8_t { Unaffected = 0, PreWindowCredible = 1, PostWindow = 2 };

struct AnchorEntry {
  uint64_t position = 0;
  ledger::AnchorCommitment commitment;
  uint64_t received_at_ms = 0;
  crypto::Signature platform_countersignature;
};

struct Review {
  crypto::PublicIdentity seller;
  uint64_t trade_id = 0;
  crypto::PublicIdentity buyer;
  uint32_t rating = 0;  // 1..5
  std::string comment;
  uint64_t at_ms = 0;
  uint64_t stake = 0;  // escrow size for platform trades
  bool off_platform = false;
};

Bytes review_payload(const crypto::PublicIdentity& seller, uint64_t trade_id, uint32_t rating,
                     const std::string& comment);
Bytes lock_payload(uint64_t listing_id, uint64_t amount, const std::string& idempotency_key);
Bytes resolve_payload(uint64_t trade_id, bool settle);
Bytes vulnerability_payload(uint64_t affected_version, const std::string& note);

struct ReputationParams {
  double half_life_days = 30.0;     // exponential decay of review weight
  uint64_t stake_cap = 100;         // credits
  double repeat_discount = 0.5;     // applied beyond repeat_free reviews per buyer
  uint32_t repeat_free = 3;
  uint64_t off_platform_stake = 1;  // stake assumed for token-only trades
};

struct ReputationScore {
  std::optional<double> score;  // absent when no eligible reviews
  uint64_t eligible_reviews = 0;
};

struct TraceEntry {
  enum class Kind : uint8_t { SelfProduced = 0, Purchased = 1, Inherited = 2 };
  Kind kind = Kind::SelfProduced;
  // SelfProduced: [range_from, range_to) of the owner's log
  uint64_t range_from = 0;
  uint64_t range_to = 0;
  // Purchased
  uint64_t trade_id = 0;
  crypto::PublicIdentity seller;
  crypto::Digest artifact_hash;
  ledger::AnchoredRoot referenced_root;
  // Inherited
  enclave::InheritanceRecord inheritance;
};

struct TraceManifest {
  crypto::PublicIdentity owner;
  std::vector<TraceEntry> entries;
};

struct EntryVerdict {
  size_t index = 0;
  std::string kind;
  bool ok = false;
  std::string detail;
};

struct LineageReport {
  std::vector<EntryVerdict> entries;
  bool accepted = false;
  uint64_t depth = 0;  // 1 + accepted inheritance steps
  uint64_t self_produced = 0;
  uint64_t purchased = 0;
  uint64_t inherited = 0;

  std::string to_string() const;
};

struct BalanceChange {
  crypto::PublicIdentity account;
  int64_t delta = 0;
  std::string cause;
  uint64_t trade_id = 0;
};

/// MeowTrade-style coordination service: accounts, gang registry, listings,
/// escrowed trades, tokens, reviews, anchors, and lineage verification.
/// Every mutation is journaled before it is applied; replaying the journal
/// reconstructs the exact state.
class Platform {
 public:
  struct Config {
    crypto::KeyPair platform_key;
    crypto::PublicIdentity vendor_root;
    std::string journal_path;  // empty = in-memory only
    enclave::Clock clock;      // wall clock when unset
    Rng rng = Rng::system();   // nonces for registration sessions
    uint64_t lock_timeout_ms = 24ull * 3600 * 1000;
    ReputationParams reputation;
  };

  static Result<Platform> create(Config config);

  const crypto::PublicIdentity& platform_public() const { return platform_key_.public_id(); }
  const crypto::PublicIdentity& vendor_root_public() const { return vendor_root_; }

  // --- simulated credit ledger ---
  Status open_account(const crypto::PublicIdentity& account);
  Status deposit(const crypto::PublicIdentity& account, uint64_t amount);
  Result<uint64_t> balance_of(const crypto::PublicIdentity& account) const;

  // --- gang lifecycle ---
  Result<crypto::Digest> create_gang(const gang::GangTemplate& tmpl);
  std::vector<gang::GangTemplate> gangs() const;
  Result<gang::GangTemplate> gang_template(const crypto::Digest& gang_id) const;
  Result<gang::SlotReservation> reserve_slot(const crypto::Digest& gang_id);
  Result<gang::SlotReservation> reserve_reregistration(const crypto::Digest& gang_id,
                                                       uint64_t slot_id);
  Result<gang::MembershipCertificate> register_member(const crypto::Digest& gang_id,
                                                      uint64_t slot_id,
                                                      const enclave::AttestationReport& report);
  Result<std::vector<gang::MemberRecord>> members(const crypto::Digest& gang_id) const;
  Result<Bytes> member_list_document(const crypto::Digest& gang_id) const;
  /// Signature, directory status, template consistency, and bulletin state.
  bool verify_membership(const gang::MembershipCertificate& cert) const;
  Status publish_vulnerability(uint64_t affected_version, const std::string& note,
                               const crypto::Signature& operator_signature);
  std::vector<VulnerabilityEntry> vulnerabilities() const;

  // --- listings and trades ---
  Result<uint64_t> post_listing(const ListingDraft& draft);
  std::vector<TradeListing> listings() const;
  Result<TradeListing> listing(uint64_t listing_id) const;
  Result<Trade> trade(uint64_t trade_id) const;
  Status cancel_listing(uint64_t listing_id);
  /// Idempotent per (listing, buyer, idempotency_key); requires the buyer's
  /// signature over lock_payload.
  Result<uint64_t> lock_funds(uint64_t listing_id, const crypto::PublicIdentity& buyer,
                              uint64_t amount, const std::string& idempotency_key,
                              const crypto::Signature& buyer_signature);
  /// Settles against a verified receipt; replays of a settled trade are no-ops.
  Result<TradeStage> submit_receipt(uint64_t trade_id, const enclave::DeliveryReceipt& receipt,
                                    std::optional<enclave::PurchaseToken> token = std::nullopt);
  Status dispute(uint64_t trade_id, const crypto::PublicIdentity& party);
  Status resolve(uint64_t trade_id, bool settle, const crypto::Signature& arbiter_signature);
  Status refund_timeout(uint64_t trade_id);

  // --- reviews and reputation ---
  Status redeem_token(const enclave::PurchaseToken& token);
  Status submit_review(const crypto::PublicIdentity& seller, uint64_t trade_id,
                       const crypto::PublicIdentity& buyer, uint32_t rating,
                       const std::string& comment, const crypto::Signature& buyer_signature);
  std::vector<Review> reviews_of(const crypto::PublicIdentity& seller) const;
  ReputationScore reputation(const crypto::PublicIdentity& seller) const;

  // --- anchor bulletin ---
  Result<uint64_t> record_anchor(const ledger::AnchorCommitment& commitment);
  std::vector<AnchorEntry> anchors(std::optional<crypto::PublicIdentity> agent = std::nullopt) const;
  AnchorWindow classify_anchor(const AnchorEntry& entry) const;

  // --- lineage ---
  LineageReport verify_trace(const TraceManifest& manifest,
                             std::optional<ledger::AnchoredRoot> current_root = std::nullopt) const;

  // --- audit surface (tests, invariants) ---
  uint64_t total_deposits() const;
  uint64_t total_balances() const;
  uint64_t total_escrow() const;
  const std::vector<BalanceChange>& balance_audit() const { return balance_audit_; }
  crypto::Digest state_fingerprint() const;

  /// Convenience for the platform-key holder (arbiter / operator).
  crypto::Signature sign_resolution(uint64_t trade_id, bool settle) const;
  crypto::Signature sign_vulnerability(uint64_t affected_version, const std::string& note) const;

 private:
  Platform(Config config, Journal journal);

  uint64_t now_ms() const;

  struct Event;
  Status commit(const Event& event);
  void apply(const Event& event);
  Result<Event> decode_event(ByteView bytes) const;

  void credit(const crypto::PublicIdentity& account, uint64_t amount, const std::string& cause,
              uint64_t trade_id);
  void debit(const crypto::PublicIdentity& account, uint64_t amount, const std::string& cause,
             uint64_t trade_id);

  gang::GangDirectory* find_gang(const crypto::Digest& gang_id);
  const gang::GangDirectory* find_gang(const crypto::Digest& gang_id) const;
  std::optional<crypto::Digest> owner_seed_hash_of(const crypto::PublicIdentity& agent) const;
  Status validate_receipt(uint64_t trade_id, const Trade& trade,
                          const enclave::DeliveryReceipt& receipt,
                          const std::optional<enclave::PurchaseToken>& token) const;

  crypto::KeyPair platform_key_;
  crypto::PublicIdentity vendor_root_;
  enclave::Clock clock_;
  mutable Rng rng_;
  uint64_t lock_timeout_ms_;
  ReputationParams reputation_params_;

  // Behind a pointer so the platform stays movable.
  std::unique_ptr<std::recursive_mutex> mutex_ = std::make_unique<std::recursive_mutex>();
  Journal journal_;

  std::map<crypto::PublicIdentity, uint64_t> balances_;
  uint64_t total_deposits_ = 0;
  std::vector<BalanceChange> balance_audit_;

  std::vector<std::pair<crypto::Digest, gang::GangDirectory>> gangs_;
  std::map<crypto::PublicIdentity, crypto::Digest> owner_seeds_;  // agent -> owner_seed_hash

  std::map<uint64_t, TradeListing> listings_;
  std::map<uint64_t, Trade> trades_;
  uint64_t next_listing_id_ = 0;
  std::map<std::string, uint64_t> lock_idempotency_;  // key -> trade_id

  std::map<std::pair<std::array<uint8_t, 32>, uint64_t>, enclave::PurchaseToken> redeemed_;
  std::vector<Review> reviews_;

  std::vector<AnchorEntry> anchors_;
  std::vector<VulnerabilityEntry> vulnerabilities_;
};

}  // namespace memtrade::market
