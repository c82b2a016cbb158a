#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "memtrade/delivery.hpp"
#include "memtrade/ledger.hpp"

namespace memtrade::enclave {

/// Identity of an attested instance: what image runs, for which task, in
/// which slot, owned by whom. Recomputable from its components.
struct Measurement {
  crypto::Digest image_template_hash;
  crypto::Digest task_description_hash;
  uint64_t slot_id = 0;
  crypto::Digest owner_seed_hash;
  crypto::Digest value;

  static Measurement compute(const crypto::Digest& image_template_hash,
                             const crypto::Digest& task_description_hash, uint64_t slot_id,
                             const crypto::Digest& owner_seed_hash);
};

struct AttestationReport {
  Measurement measurement;
  uint64_t security_version = 0;
  crypto::PublicIdentity agent_public;
  std::array<uint8_t, 16> nonce{};
  crypto::Signature vendor_signature;
};

Bytes attestation_payload(const crypto::Digest& measurement_value, uint64_t security_version,
                          const crypto::PublicIdentity& agent_public,
                          const std::array<uint8_t, 16>& nonce);

/// Checks the vendor signature and that measurement.value recomputes from
/// its components.
bool verify_attestation(const AttestationReport& report, const crypto::PublicIdentity& vendor_root);

struct ProviderPublic {
  std::string endpoint;
  crypto::PublicIdentity provider_public;
  std::string model_name;

  auto operator<=>(const ProviderPublic&) const = default;
};

canon::Value provider_public_value(const ProviderPublic& p);

struct ProviderConfig {
  ProviderPublic pub;
  Bytes credential;  // never leaves the enclave, redacted from logged content
};

/// gang_config_hash binds the log to the measured identity and the
/// configured provider.
crypto::Digest gang_config_hash(const crypto::Digest& measurement_value, const ProviderPublic& p);

struct ProviderHello {
  crypto::PublicIdentity provider_public;
  std::string model_name;
  crypto::Signature signature;
};

Bytes hello_payload(const std::array<uint8_t, 16>& nonce, const std::string& model_name);

struct ProviderReply {
  Bytes response;
  uint64_t token_in = 0;
  uint64_t token_out = 0;
};

/// Channel to a model provider. The mock in the harness is the only
/// in-repo implementation.
class ModelProvider {
 public:
  virtual ~ModelProvider() = default;
  virtual ProviderHello hello(const std::array<uint8_t, 16>& nonce) = 0;
  virtual Result<ProviderReply> call(ByteView credential, ByteView prompt) = 0;
};

struct DeliveryReceipt {
  uint64_t trade_id = 0;
  crypto::PublicIdentity buyer;
  crypto::Digest artifact_hash;
  ledger::AnchoredRoot referenced_root;
  crypto::Signature enclave_signature;
};

Bytes receipt_payload(uint64_t trade_id, const crypto::PublicIdentity& buyer,
                      const crypto::Digest& artifact_hash, const ledger::AnchoredRoot& root);
bool verify_receipt(const DeliveryReceipt& receipt, const crypto::PublicIdentity& seller);

/// One-time review credential, issued with the receipt.
struct PurchaseToken {
  crypto::PublicIdentity seller;
  uint64_t trade_id = 0;
  crypto::PublicIdentity buyer;
  crypto::Signature seller_signature;
};

Bytes token_payload(uint64_t trade_id, const crypto::PublicIdentity& buyer);
bool verify_token(const PurchaseToken& token);

struct ReceiptBundle {
  DeliveryReceipt receipt;
  PurchaseToken token;
};

struct InheritanceRecord {
  crypto::PublicIdentity predecessor;
  crypto::PublicIdentity successor;
  ledger::AnchoredRoot root_at_transfer;
  crypto::PublicIdentity owner_public;
  crypto::Signature owner_authorization;
  crypto::Signature enclave_signature;
};

Bytes inheritance_payload(const InheritanceRecord& record);
/// Both signatures must verify; the seed-to-measurement binding is enforced
/// by the issuing enclave at authorization time.
bool verify_inheritance(const InheritanceRecord& record);

struct ResaleConfirmation {
  crypto::Digest artifact_hash;
  crypto::PublicIdentity requester;
  crypto::Signature signature;
};

Bytes confirmation_payload(const crypto::Digest& artifact_hash,
                           const crypto::PublicIdentity& requester);
bool verify_confirmation(const ResaleConfirmation& confirmation,
                         const crypto::PublicIdentity& seller);

struct EnclavePolicy {
  bool resale_confirmation_allowed = false;
};

using Clock = std::function<uint64_t()>;

struct BootParams {
  crypto::Digest image_template_hash;
  crypto::Digest task_description_hash;
  uint64_t slot_id = 0;
  std::array<uint8_t, 32> owner_seed{};
  uint64_t security_version = 1;
  ProviderConfig provider;
  EnclavePolicy policy;
  crypto::KeyPair vendor_root;  // simulated hardware vendor key
  Clock clock;                  // wall clock when unset
};

inline constexpr std::array<uint8_t, 8> kRedactionMask{'[', 'R', 'E', 'D', 'A', 'C', 'T', ']'};

/// Simulated certification core. Holds the agent signing key and the
/// measured log; the agent runtime reaches the provider only through
/// proxy_call. No operation rewrites or deletes a logged interaction.
class Enclave {
 public:
  static Enclave boot(BootParams params, Rng rng);

  const Measurement& measurement() const { return measurement_; }
  uint64_t security_version() const { return security_version_; }
  const crypto::PublicIdentity& agent_public() const { return agent_key_.public_id(); }
  const ledger::GenesisInputs& genesis_inputs() const { return log_.genesis_inputs(); }
  const ledger::Log& log() const { return log_; }
  const ProviderPublic& provider_public() const { return provider_.pub; }

  AttestationReport attest(const std::array<uint8_t, 16>& nonce) const;

  /// Authenticates the provider, redacts the credential from the logged
  /// transcript, appends to the ledger, returns the raw response.
  Result<Bytes> proxy_call(ModelProvider& provider, ByteView prompt);

  Result<ledger::ArtifactBundle> build_artifact(std::vector<uint64_t> selection,
                                                const ledger::DisclosurePolicy& policy,
                                                std::optional<Bytes> attachment = std::nullopt) const;
  Result<ledger::ArtifactBundle> build_artifact(std::vector<uint64_t> selection,
                                                const std::vector<ledger::DisclosurePolicy>& policies,
                                                std::optional<Bytes> attachment = std::nullopt) const;

  /// Verifies the delivered container against the local log before signing.
  /// `key` empty means the container is a plaintext artifact container.
  Result<ReceiptBundle> issue_receipt(uint64_t trade_id, const crypto::PublicIdentity& buyer,
                                      ByteView delivered_container,
                                      std::optional<delivery::Key> key = std::nullopt);

  /// Fresh completeness confirmation for a known artifact. Default policy
  /// refuses every requester except the original buyer.
  Result<ResaleConfirmation> confirm_artifact(const crypto::Digest& artifact_hash,
                                              const crypto::PublicIdentity& requester,
                                              bool fee_paid = false) const;

  Result<InheritanceRecord> authorize_inheritance(const std::array<uint8_t, 32>& owner_seed,
                                                  const crypto::PublicIdentity& successor) const;

  /// Successor-side import: stores the record after verifying it names this
  /// agent as successor.
  Status accept_inheritance(const InheritanceRecord& record);
  const std::vector<InheritanceRecord>& inherited() const { return inherited_; }

  Result<ledger::AnchorCommitment> sign_anchor(uint64_t at_length, uint64_t wallclock_ms) const;

  Bytes serialize_state() const;
  static Result<Enclave> restore_state(ByteView bytes, crypto::KeyPair vendor_root,
                                       Clock clock = {});

 private:
  Enclave(BootParams params, Rng rng, crypto::KeyPair agent_key, ledger::Log log);

  uint64_t now_ms();

  Measurement measurement_;
  uint64_t security_version_;
  crypto::KeyPair agent_key_;
  ProviderConfig provider_;
  EnclavePolicy policy_;
  crypto::KeyPair vendor_root_;
  Clock clock_;
  Rng rng_;
  ledger::Log log_;

  struct TradeBinding {
    crypto::PublicIdentity buyer;
    crypto::Digest artifact_hash;
  };
  std::map<uint64_t, TradeBinding> trades_;
  std::map<crypto::Digest, uint64_t> receipted_;  // artifact_hash -> trade_id
  std::vector<InheritanceRecord> inherited_;
};

}  // namespace memtrade::enclave
