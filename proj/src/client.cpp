#include "memtrade/client.hpp"

#include <httplib.h>

#include "memtrade/wire.hpp"

namespace memtrade::client {

using nlohmann::json;

struct PlatformClient::Impl {
  explicit Impl(const std::string& base_url) : http(base_url.c_str()) {
    http.set_connection_timeout(5);
    http.set_read_timeout(30);
  }
  mutable httplib::Client http;
};

namespace {

Result<json> expect_json(const httplib::Result& result) {
  using R = Result<json>;
  if (!result) return R::failure("platform unreachable");
  json body = json::parse(result->body, nullptr, false);
  if (body.is_discarded()) return R::failure("platform returned non-JSON body");
  if (result->status >= 400) {
    return R::failure(body.value("error", "platform error " + std::to_string(result->status)));
  }
  return body;
}

}  // namespace

PlatformClient::PlatformClient(std::string base_url)
    : impl_(std::make_unique<Impl>(base_url)) {}

PlatformClient::~PlatformClient() = default;

Result<crypto::PublicIdentity> PlatformClient::platform_public() const {
  auto body = expect_json(impl_->http.Get("/platform"));
  if (!body.ok()) return Result<crypto::PublicIdentity>::failure(body.error());
  return wire::parse_public(body.value().value("platform_public", json()));
}

Result<crypto::PublicIdentity> PlatformClient::vendor_root_public() const {
  auto body = expect_json(impl_->http.Get("/platform"));
  if (!body.ok()) return Result<crypto::PublicIdentity>::failure(body.error());
  return wire::parse_public(body.value().value("vendor_root_public", json()));
}

Status PlatformClient::open_account(const crypto::PublicIdentity& account) const {
  json req{{"account", account.hex()}};
  auto body = expect_json(impl_->http.Post("/accounts/open", req.dump(), "application/json"));
  return body.ok() ? Status() : Status::failure(body.error());
}

Result<uint64_t> PlatformClient::deposit(const crypto::PublicIdentity& account,
                                         uint64_t amount) const {
  json req{{"account", account.hex()}, {"amount", amount}};
  auto body = expect_json(impl_->http.Post("/accounts/deposit", req.dump(), "application/json"));
  if (!body.ok()) return Result<uint64_t>::failure(body.error());
  return wire::parse_u64(body.value().value("balance", json()));
}

Result<uint64_t> PlatformClient::balance_of(const crypto::PublicIdentity& account) const {
  auto body = expect_json(impl_->http.Get(("/accounts/" + account.hex()).c_str()));
  if (!body.ok()) return Result<uint64_t>::failure(body.error());
  return wire::parse_u64(body.value().value("balance", json()));
}

Result<crypto::Digest> PlatformClient::create_gang(const gang::GangTemplate& tmpl) const {
  auto body =
      expect_json(impl_->http.Post("/gangs", wire::to_json(tmpl).dump(), "application/json"));
  if (!body.ok()) return Result<crypto::Digest>::failure(body.error());
  return wire::parse_digest(body.value().value("gang_id", json()));
}

Result<std::vector<gang::GangTemplate>> PlatformClient::gangs() const {
  using R = Result<std::vector<gang::GangTemplate>>;
  auto body = expect_json(impl_->http.Get("/gangs"));
  if (!body.ok()) return R::failure(body.error());
  std::vector<gang::GangTemplate> out;
  for (const json& j : body.value().value("gangs", json::array())) {
    auto tmpl = wire::parse_template(j);
    if (!tmpl.ok()) return R::failure(tmpl.error());
    out.push_back(tmpl.value());
  }
  return out;
}

Result<gang::SlotReservation> PlatformClient::reserve_slot(
    const crypto::Digest& gang_id, std::optional<uint64_t> reregister_slot) const {
  using R = Result<gang::SlotReservation>;
  json req = json::object();
  if (reregister_slot) req["reregister_slot"] = *reregister_slot;
  auto body = expect_json(impl_->http.Post(("/gangs/" + gang_id.hex() + "/slots").c_str(),
                                           req.dump(), "application/json"));
  if (!body.ok()) return R::failure(body.error());
  auto slot = wire::parse_u64(body.value().value("slot_id", json()));
  auto nonce = wire::parse_base64(body.value().value("nonce", json()));
  if (!slot.ok() || !nonce.ok() || nonce.value().size() != 16) {
    return R::failure("malformed slot reservation");
  }
  gang::SlotReservation reservation;
  reservation.slot_id = slot.value();
  std::copy(nonce.value().begin(), nonce.value().end(), reservation.nonce.begin());
  return reservation;
}

Result<gang::MembershipCertificate> PlatformClient::register_member(
    const crypto::Digest& gang_id, uint64_t slot_id,
    const enclave::AttestationReport& report) const {
  using R = Result<gang::MembershipCertificate>;
  json req{{"slot_id", slot_id}, {"report", wire::to_json(report)}};
  auto body = expect_json(impl_->http.Post(("/gangs/" + gang_id.hex() + "/register").c_str(),
                                           req.dump(), "application/json"));
  if (!body.ok()) return R::failure(body.error());
  return wire::parse_certificate(body.value().value("certificate", json()));
}

Result<std::string> PlatformClient::members_json(const crypto::Digest& gang_id) const {
  auto body = expect_json(impl_->http.Get(("/gangs/" + gang_id.hex() + "/members").c_str()));
  if (!body.ok()) return Result<std::string>::failure(body.error());
  return body.value().dump(2);
}

Result<uint64_t> PlatformClient::post_listing(const market::ListingDraft& draft) const {
  auto body =
      expect_json(impl_->http.Post("/listings", wire::to_json(draft).dump(), "application/json"));
  if (!body.ok()) return Result<uint64_t>::failure(body.error());
  return wire::parse_u64(body.value().value("listing_id", json()));
}

Result<std::vector<market::TradeListing>> PlatformClient::listings() const {
  using R = Result<std::vector<market::TradeListing>>;
  auto body = expect_json(impl_->http.Get("/listings"));
  if (!body.ok()) return R::failure(body.error());
  std::vector<market::TradeListing> out;
  for (const json& j : body.value().value("listings", json::array())) {
    auto draft = wire::parse_listing_draft(j);
    auto id = wire::parse_u64(j.value("listing_id", json()));
    if (!draft.ok() || !id.ok()) return R::failure("malformed listing in response");
    out.push_back(market::TradeListing{id.value(), draft.value()});
  }
  return out;
}

Result<std::string> PlatformClient::trade_json(uint64_t trade_id) const {
  auto body = expect_json(impl_->http.Get(("/trades/" + std::to_string(trade_id)).c_str()));
  if (!body.ok()) return Result<std::string>::failure(body.error());
  return body.value().dump(2);
}

Result<uint64_t> PlatformClient::lock_funds(uint64_t listing_id,
                                            const crypto::PublicIdentity& buyer, uint64_t amount,
                                            const std::string& idempotency_key,
                                            const crypto::Signature& buyer_signature) const {
  json req{{"buyer", buyer.hex()},
           {"amount", amount},
           {"idempotency_key", idempotency_key},
           {"buyer_signature", to_hex(buyer_signature.view())}};
  auto body = expect_json(impl_->http.Post(
      ("/trades/" + std::to_string(listing_id) + "/lock").c_str(), req.dump(),
      "application/json"));
  if (!body.ok()) return Result<uint64_t>::failure(body.error());
  return wire::parse_u64(body.value().value("trade_id", json()));
}

Result<std::string> PlatformClient::submit_receipt(
    uint64_t trade_id, const enclave::DeliveryReceipt& receipt,
    std::optional<enclave::PurchaseToken> token) const {
  json req{{"receipt", wire::to_json(receipt)}};
  if (token) req["token"] = wire::to_json(*token);
  auto body = expect_json(impl_->http.Post(
      ("/trades/" + std::to_string(trade_id) + "/receipt").c_str(), req.dump(),
      "application/json"));
  if (!body.ok()) return Result<std::string>::failure(body.error());
  return body.value().value("stage", "");
}

Status PlatformClient::dispute(uint64_t trade_id, const crypto::PublicIdentity& party) const {
  json req{{"party", party.hex()}};
  auto body = expect_json(impl_->http.Post(
      ("/trades/" + std::to_string(trade_id) + "/dispute").c_str(), req.dump(),
      "application/json"));
  return body.ok() ? Status() : Status::failure(body.error());
}

Status PlatformClient::resolve(uint64_t trade_id, const std::string& outcome,
                               const crypto::Signature& arbiter_signature) const {
  json req{{"outcome", outcome}, {"arbiter_signature", to_hex(arbiter_signature.view())}};
  auto body = expect_json(impl_->http.Post(
      ("/trades/" + std::to_string(trade_id) + "/resolve").c_str(), req.dump(),
      "application/json"));
  return body.ok() ? Status() : Status::failure(body.error());
}

Status PlatformClient::refund_timeout(uint64_t trade_id) const {
  json req{{"timeout", true}};
  auto body = expect_json(impl_->http.Post(
      ("/trades/" + std::to_string(trade_id) + "/resolve").c_str(), req.dump(),
      "application/json"));
  return body.ok() ? Status() : Status::failure(body.error());
}

Status PlatformClient::redeem_token(const enclave::PurchaseToken& token) const {
  auto body = expect_json(
      impl_->http.Post("/tokens/redeem", wire::to_json(token).dump(), "application/json"));
  return body.ok() ? Status() : Status::failure(body.error());
}

Status PlatformClient::submit_review(const crypto::PublicIdentity& seller, uint64_t trade_id,
                                     const crypto::PublicIdentity& buyer, uint32_t rating,
                                     const std::string& comment,
                                     const crypto::Signature& buyer_signature) const {
  json req{{"seller", seller.hex()},       {"trade_id", trade_id},
           {"buyer", buyer.hex()},         {"rating", rating},
           {"comment", comment},           {"buyer_signature", to_hex(buyer_signature.view())}};
  auto body = expect_json(impl_->http.Post("/reviews", req.dump(), "application/json"));
  return body.ok() ? Status() : Status::failure(body.error());
}

Result<market::ReputationScore> PlatformClient::reputation(
    const crypto::PublicIdentity& seller) const {
  using R = Result<market::ReputationScore>;
  auto body = expect_json(impl_->http.Get(("/reputation/" + seller.hex()).c_str()));
  if (!body.ok()) return R::failure(body.error());
  market::ReputationScore score;
  const json& j = body.value();
  if (j.contains("score") && j.at("score").is_number()) score.score = j.at("score").get<double>();
  score.eligible_reviews = j.value("eligible_reviews", 0ull);
  return score;
}

Status PlatformClient::publish_vulnerability(uint64_t affected_version, const std::string& note,
                                             const crypto::Signature& operator_signature) const {
  json req{{"affected_version", affected_version},
           {"note", note},
           {"operator_signature", to_hex(operator_signature.view())}};
  auto body = expect_json(impl_->http.Post("/bulletin", req.dump(), "application/json"));
  return body.ok() ? Status() : Status::failure(body.error());
}

Result<uint64_t> PlatformClient::record_anchor(const ledger::AnchorCommitment& commitment) const {
  auto body = expect_json(
      impl_->http.Post("/anchors", wire::to_json(commitment).dump(), "application/json"));
  if (!body.ok()) return Result<uint64_t>::failure(body.error());
  return wire::parse_u64(body.value().value("position", json()));
}

Result<std::string> PlatformClient::bulletin_json() const {
  auto body = expect_json(impl_->http.Get("/bulletin"));
  if (!body.ok()) return Result<std::string>::failure(body.error());
  return body.value().dump(2);
}

Result<std::string> PlatformClient::verify_trace_json(
    const market::TraceManifest& manifest,
    std::optional<ledger::AnchoredRoot> current_root) const {
  json req{{"manifest", wire::to_json(manifest)}};
  if (current_root) req["current_root"] = wire::to_json(*current_root);
  auto body = expect_json(impl_->http.Post("/trace/verify", req.dump(), "application/json"));
  if (!body.ok()) return Result<std::string>::failure(body.error());
  return body.value().dump(2);
}

}  // namespace memtrade::client
