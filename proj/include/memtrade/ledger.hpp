#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memtrade/canon.hpp"
#include "memtrade/container.hpp"
#include "memtrade/crypto.hpp"
#include "memtrade/result.hpp"
#include "memtrade/rng.hpp"

namespace memtrade::ledger {

// Canonical committed field order. Every interaction commits all six.
inline constexpr size_t kFieldCount = 6;
inline constexpr std::array<std::string_view, kFieldCount> kFieldNames{
    "prompt", "response", "model_name", "token_in", "token_out", "timestamp"};

enum Field : size_t {
  kPrompt = 0,
  kResponse = 1,
  kModelName = 2,
  kTokenIn = 3,
  kTokenOut = 4,
  kTimestamp = 5,
};

struct InteractionRecord {
  uint64_t seq_no = 0;
  Bytes prompt;
  Bytes response;
  std::string model_name;
  uint64_t token_in = 0;
  uint64_t token_out = 0;
  uint64_t timestamp_ms = 0;
  std::array<crypto::Salt, kFieldCount> field_salts{};
};

// Canonical leaf encoding of one committed field.
canon::Value field_value(const InteractionRecord& rec, size_t field);

struct InteractionDigest {
  uint64_t seq_no = 0;
  std::array<crypto::Digest, kFieldCount> field_digests{};
  crypto::Digest digest;
};

InteractionDigest digest_record(const InteractionRecord& rec);

crypto::Digest interaction_digest_over(uint64_t seq_no,
                                       const std::array<crypto::Digest, kFieldCount>& field_digests);

struct AnchoredRoot {
  uint64_t length = 0;
  crypto::Digest root;

  auto operator<=>(const AnchoredRoot&) const = default;
};

struct GenesisInputs {
  crypto::Digest gang_config_hash;
  crypto::PublicIdentity agent;

  auto operator<=>(const GenesisInputs&) const = default;
};

AnchoredRoot genesis(const GenesisInputs& inputs);

crypto::Digest chain_next(const crypto::Digest& prev_root, const crypto::Digest& interaction_digest);

enum class FieldDisclosure : uint8_t { Open = 1, Hide = 0 };
using DisclosurePolicy = std::array<FieldDisclosure, kFieldCount>;

DisclosurePolicy open_all();
DisclosurePolicy hide_all();

struct FieldEntry {
  bool opened = false;
  Bytes value;         // opened only
  crypto::Salt salt{}; // opened only
  crypto::Digest hidden;
};

struct DisclosedInteraction {
  uint64_t seq_no = 0;
  std::array<FieldEntry, kFieldCount> fields;
};

/// Decoded plaintext of an opened byte-string field (prompt, response,
/// model_name); nullopt for hidden entries or non-bytes leaves.
std::optional<Bytes> opened_bytes(const FieldEntry& entry);
/// Decoded value of an opened integer field (token counts, timestamp).
std::optional<uint64_t> opened_u64(const FieldEntry& entry);

struct MemoryArtifact {
  std::vector<uint64_t> selection;  // sorted, possibly non-contiguous
  std::vector<DisclosedInteraction> interactions;
  std::optional<crypto::Digest> attachment_hash;  // uncertified side-channel data
  AnchoredRoot claimed_root;
  GenesisInputs claimed_genesis;
};

struct DisclosureProof {
  // Complete ordered digest chain input for indices 0..claimed_root.length-1.
  std::vector<crypto::Digest> interaction_digests;
  // Full field-digest vectors for the selected indices, aligned with selection.
  std::vector<std::array<crypto::Digest, kFieldCount>> selected_field_digests;
};

struct ArtifactBundle {
  MemoryArtifact artifact;
  DisclosureProof proof;
};

Bytes serialize_bundle(const ArtifactBundle& bundle);
std::optional<ArtifactBundle> parse_bundle(ByteView container);

/// Hash bound into receipts: digest over the exact delivered container bytes.
crypto::Digest artifact_hash(ByteView container_bytes);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerificationReport {
  std::vector<CheckResult> checks;
  bool attachment_present = false;

  bool ok() const;
  void add(std::string name, bool pass, std::string detail = "");
  std::string to_string() const;
};

/// Verifier side; input is adversarial. All failures are negative report
/// entries, never exceptions.
VerificationReport verify_artifact(const ArtifactBundle& bundle,
                                   const AnchoredRoot& expected_root,
                                   const GenesisInputs& genesis_inputs);

VerificationReport verify_artifact_bytes(ByteView container,
                                         const AnchoredRoot& expected_root,
                                         const GenesisInputs& genesis_inputs);

/// Timestamped commitment to a log prefix; signed by the owning enclave.
struct AnchorCommitment {
  crypto::PublicIdentity agent;
  AnchoredRoot root_at;
  uint64_t wallclock_ms = 0;
  crypto::Signature signature;
};

Bytes anchor_payload(const crypto::PublicIdentity& agent, const AnchoredRoot& root_at,
                     uint64_t wallclock_ms);
bool verify_anchor(const AnchorCommitment& commitment);

/// Measured interaction log. One writer per log; verification helpers above
/// are pure and freely concurrent.
class Log {
 public:
  explicit Log(GenesisInputs inputs);

  const GenesisInputs& genesis_inputs() const { return genesis_; }
  uint64_t size() const { return records_.size(); }
  const AnchoredRoot& root() const { return current_root_; }

  /// Root after `length` interactions (0 = genesis).
  Result<AnchoredRoot> root_at(uint64_t length) const;

  const InteractionRecord& record(uint64_t i) const { return records_[i]; }
  const InteractionDigest& interaction(uint64_t i) const { return digests_[i]; }

  /// Draws one fresh salt per committed field; seq_no is assigned to the
  /// current length.
  InteractionRecord make_record(Bytes prompt, Bytes response, std::string model_name,
                                uint64_t token_in, uint64_t token_out, uint64_t timestamp_ms,
                                Rng& rng) const;

  /// Rejects seq_no gaps and timestamp regressions.
  Result<AnchoredRoot> append(InteractionRecord rec);

  Result<ArtifactBundle> build_artifact(std::vector<uint64_t> selection,
                                        const DisclosurePolicy& policy,
                                        std::optional<Bytes> attachment = std::nullopt) const;

  /// Per-selected-index policies, aligned with `selection`.
  Result<ArtifactBundle> build_artifact(std::vector<uint64_t> selection,
                                        const std::vector<DisclosurePolicy>& policies,
                                        std::optional<Bytes> attachment = std::nullopt) const;

  Bytes serialize() const;
  static std::optional<Log> restore(ByteView bytes);

 private:
  GenesisInputs genesis_;
  std::vector<InteractionRecord> records_;
  std::vector<InteractionDigest> digests_;
  std::vector<crypto::Digest> roots_;  // roots_[i] = root after i interactions
  AnchoredRoot current_root_;
};

}  // namespace memtrade::ledger
