#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "memtrade/enclave.hpp"

namespace memtrade::gang {

enum class FieldLogging : uint8_t { Plaintext = 0, DigestOnly = 1 };

/// Per-field logging choices plus metadata toggles; part of the measured
/// gang configuration.
struct LoggingPolicy {
  std::array<FieldLogging, ledger::kFieldCount> fields{};
  bool record_token_counts = true;
  bool record_timestamps = true;

  auto operator<=>(const LoggingPolicy&) const = default;
};

enum class SettlementMode : uint8_t { PlatformEscrow = 0, PeerToPeer = 1 };

struct TradePolicy {
  bool resale_allowed = false;
  bool full_prompt_disclosure = false;
  SettlementMode settlement = SettlementMode::PlatformEscrow;

  auto operator<=>(const TradePolicy&) const = default;
};

struct GangTemplate {
  std::string task_description;
  crypto::Digest image_template_hash;
  enclave::ProviderPublic model_provider;
  LoggingPolicy logging_policy;
  TradePolicy trade_policy;
  std::string code_reference;  // repository branch locator
  uint64_t min_security_version = 1;

  canon::Value canonical_fields() const;
  crypto::Digest gang_id() const;
  crypto::Digest task_hash() const;

  auto operator<=>(const GangTemplate&) const = default;
};

std::optional<GangTemplate> template_from_value(const canon::Value& v);

struct MembershipCertificate {
  crypto::Digest gang_id;
  uint64_t slot_id = 0;
  crypto::PublicIdentity agent_public;
  crypto::Digest measurement_value;
  uint64_t security_version = 0;
  uint64_t issued_at_ms = 0;
  crypto::Signature platform_signature;

  auto operator<=>(const MembershipCertificate&) const = default;
};

Bytes certificate_payload(const MembershipCertificate& cert);
bool verify_certificate(const MembershipCertificate& cert, const crypto::PublicIdentity& platform);

struct SlotReservation {
  uint64_t slot_id = 0;
  std::array<uint8_t, 16> nonce{};
};

enum class MemberStatus : uint8_t { Active = 0, Superseded = 1 };

struct MemberRecord {
  uint64_t slot_id = 0;
  enclave::Measurement measurement;
  MembershipCertificate certificate;
  MemberStatus status = MemberStatus::Active;
};

/// Registration and directory state for one gang. Validation is separated
/// from mutation so a journaling caller can validate, persist, then apply.
class GangDirectory {
 public:
  explicit GangDirectory(GangTemplate tmpl);

  const GangTemplate& tmpl() const { return template_; }
  uint64_t next_slot() const { return next_slot_; }

  uint64_t peek_slot() const { return next_slot_; }
  void apply_reserve(uint64_t slot_id, const std::array<uint8_t, 16>& nonce, bool reregistration);

  /// Full registration gate: session freshness, vendor signature,
  /// measurement consistency with the template, security-version floor,
  /// slot reuse, and (for re-registration) version increase + owner match.
  Status validate_registration(uint64_t slot_id, const enclave::AttestationReport& report,
                               const crypto::PublicIdentity& vendor_root) const;

  MembershipCertificate apply_registration(uint64_t slot_id,
                                           const enclave::AttestationReport& report,
                                           uint64_t issued_at_ms,
                                           const crypto::KeyPair& platform_key);

  /// All certificates ever issued for a slot, oldest first.
  const std::vector<MemberRecord>& slot_history(uint64_t slot_id) const;
  std::vector<MemberRecord> active_members() const;

  enum class CertStatus { Unknown, Active, Superseded };
  CertStatus certificate_status(const MembershipCertificate& cert) const;

  uint64_t document_version() const { return document_version_; }
  /// Platform-signed member-list document (versioned container).
  Bytes member_list_document(const crypto::KeyPair& platform_key) const;

 private:
  struct Session {
    std::array<uint8_t, 16> nonce{};
    bool consumed = false;
    bool reregistration = false;
  };

  GangTemplate template_;
  uint64_t next_slot_ = 0;
  uint64_t document_version_ = 0;
  std::map<uint64_t, Session> sessions_;
  std::map<uint64_t, std::vector<MemberRecord>> members_;
};

bool verify_member_list_document(ByteView document, const crypto::PublicIdentity& platform);

}  // namespace memtrade::gang
