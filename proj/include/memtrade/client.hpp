#pragma once

#include <memory>
#include <string>

#include "memtrade/market.hpp"

namespace memtrade::client {

/// Typed HTTP client for the platform wire protocol.
class PlatformClient {
 public:
  explicit PlatformClient(std::string base_url);
  ~PlatformClient();

  Result<crypto::PublicIdentity> platform_public() const;
  Result<crypto::PublicIdentity> vendor_root_public() const;

  Status open_account(const crypto::PublicIdentity& account) const;
  Result<uint64_t> deposit(const crypto::PublicIdentity& account, uint64_t amount) const;
  Result<uint64_t> balance_of(const crypto::PublicIdentity& account) const;

  Result<crypto::Digest> create_gang(const gang::GangTemplate& tmpl) const;
  Result<std::vector<gang::GangTemplate>> gangs() const;
  Result<gang::SlotReservation> reserve_slot(const crypto::Digest& gang_id,
                                             std::optional<uint64_t> reregister_slot =
                                                 std::nullopt) const;
  Result<gang::MembershipCertificate> register_member(
      const crypto::Digest& gang_id, uint64_t slot_id,
      const enclave::AttestationReport& report) const;
  Result<std::string> members_json(const crypto::Digest& gang_id) const;

  Result<uint64_t> post_listing(const market::ListingDraft& draft) const;
  Result<std::vector<market::TradeListing>> listings() const;
  Result<std::string> trade_json(uint64_t trade_id) const;
  Result<uint64_t> lock_funds(uint64_t listing_id, const crypto::PublicIdentity& buyer,
                              uint64_t amount, const std::string& idempotency_key,
                              const crypto::Signature& buyer_signature) const;
  Result<std::string> submit_receipt(uint64_t trade_id, const enclave::DeliveryReceipt& receipt,
                                     std::optional<enclave::PurchaseToken> token =
                                         std::nullopt) const;
  Status dispute(uint64_t trade_id, const crypto::PublicIdentity& party) const;
  Status resolve(uint64_t trade_id, const std::string& outcome,
                 const crypto::Signature& arbiter_signature) const;
  Status refund_timeout(uint64_t trade_id) const;

  Status redeem_token(const enclave::PurchaseToken& token) const;
  Status submit_review(const crypto::PublicIdentity& seller, uint64_t trade_id,
                       const crypto::PublicIdentity& buyer, uint32_t rating,
                       const std::string& comment,
                       const crypto::Signature& buyer_signature) const;
  Result<market::ReputationScore> reputation(const crypto::PublicIdentity& seller) const;

  Status publish_vulnerability(uint64_t affected_version, const std::string& note,
                               const crypto::Signature& operator_signature) const;
  Result<uint64_t> record_anchor(const ledger::AnchorCommitment& commitment) const;
  Result<std::string> bulletin_json() const;
  Result<std::string> verify_trace_json(const market::TraceManifest& manifest,
                                        std::optional<ledger::AnchoredRoot> current_root) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace memtrade::client
