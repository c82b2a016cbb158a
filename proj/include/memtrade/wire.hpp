#pragma once

#include <json.hpp>

#include "memtrade/market.hpp"

namespace memtrade::wire {

// JSON wire schema mirroring the canonical types one-to-one: hashes, keys
// and signatures as lowercase hex; free-form bytes as base64; integers as
// JSON numbers. Hash computations always run over the binary canonical
// encoding, never over JSON bytes.

using nlohmann::json;

json to_json(const crypto::Digest& d);
json to_json(const ledger::AnchoredRoot& r);
json to_json(const ledger::GenesisInputs& g);
json to_json(const enclave::Measurement& m);
json to_json(const enclave::AttestationReport& r);
json to_json(const enclave::ProviderPublic& p);
json to_json(const gang::GangTemplate& t);
json to_json(const gang::MembershipCertificate& c);
json to_json(const gang::MemberRecord& m);
json to_json(const enclave::DeliveryReceipt& r);
json to_json(const enclave::PurchaseToken& t);
json to_json(const enclave::InheritanceRecord& r);
json to_json(const market::CertifiedMetadata& m);
json to_json(const market::ListingDraft& d);
json to_json(const market::TradeListing& l);
json to_json(const market::Trade& t);
json to_json(const market::VulnerabilityEntry& v);
json to_json(const market::AnchorEntry& a, market::AnchorWindow window);
json to_json(const ledger::AnchorCommitment& a);
json to_json(const market::TraceManifest& m);
json to_json(const market::LineageReport& r);
json to_json(const market::ReputationScore& s);
json to_json(const ledger::VerificationReport& r);

Result<crypto::Digest> parse_digest(const json& j);
Result<crypto::PublicIdentity> parse_public(const json& j);
Result<crypto::Signature> parse_signature(const json& j);
Result<Bytes> parse_base64(const json& j);
Result<uint64_t> parse_u64(const json& j);
Result<ledger::AnchoredRoot> parse_root(const json& j);
Result<enclave::AttestationReport> parse_report(const json& j);
Result<gang::GangTemplate> parse_template(const json& j);
Result<gang::MembershipCertificate> parse_certificate(const json& j);
Result<enclave::DeliveryReceipt> parse_receipt(const json& j);
Result<enclave::PurchaseToken> parse_token(const json& j);
Result<enclave::InheritanceRecord> parse_inheritance(const json& j);
Result<market::ListingDraft> parse_listing_draft(const json& j);
Result<ledger::AnchorCommitment> parse_anchor(const json& j);
Result<market::TraceManifest> parse_manifest(const json& j);

}  // namespace memtrade::wire
