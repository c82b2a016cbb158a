#include "memtrade/service.hpp"

#include <httplib.h>

#include "memtrade/wire.hpp"

namespace memtrade::service {

using nlohmann::json;

namespace {

void reply_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(2), "application/json");
}

void reply_error(httplib::Response& res, const std::string& message, int status = 400) {
  reply_json(res, json{{"error", message}}, status);
}

std::optional<json> body_json(const httplib::Request& req, httplib::Response& res) {
  json parsed = json::parse(req.body, nullptr, false);
  if (parsed.is_discarded()) {
    reply_error(res, "request body is not valid JSON");
    return std::nullopt;
  }
  return parsed;
}

std::optional<crypto::Digest> path_digest(const httplib::Request& req, httplib::Response& res) {
  auto d = crypto::Digest::from_hex_str(req.matches[1].str());
  if (!d) reply_error(res, "malformed id in path", 404);
  return d;
}

std::optional<uint64_t> path_u64(const httplib::Request& req, httplib::Response& res) {
  const std::string s = req.matches[1].str();
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    reply_error(res, "malformed id in path", 404);
    return std::nullopt;
  }
  return std::stoull(s);
}

}  // namespace

PlatformService::PlatformService(market::Platform& platform)
    : platform_(platform), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

PlatformService::~PlatformService() {
  stop();
}

void PlatformService::install_routes() {
  httplib::Server& s = *server_;

  s.Get("/gangs", [this](const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    for (const gang::GangTemplate& t : platform_.gangs()) out.push_back(wire::to_json(t));
    reply_json(res, json{{"gangs", out}});
  });

  s.Post("/gangs", [this](const httplib::Request& req, httplib::Response& res) {
    auto body = body_json(req, res);
    if (!body) return;
    auto tmpl = wire::parse_template(*body);
    if (!tmpl.ok()) return reply_error(res, tmpl.error());
    auto created = platform_.create_gang(tmpl.value());
    if (!created.ok()) return reply_error(res, created.error());
    reply_json(res, json{{"gang_id", created.value().hex()}});
  });

  s.Post(R"(/gangs/([0-9a-f]{64})/slots)", [this](const httplib::Request& req,
                                                  httplib::Response& res) {
    auto gid = path_digest(req, res);
    if (!gid) return;
    auto body = body_json(req, res);
    if (!body) return;
    Result<gang::SlotReservation> reservation = [&] {
      if (body->contains("reregister_slot")) {
        auto slot = wire::parse_u64(body->at("reregister_slot"));
        if (!slot.ok()) return Result<gang::SlotReservation>::failure(slot.error());
        return platform_.reserve_reregistration(*gid, slot.value());
      }
      return platform_.reserve_slot(*gid);
    }();
    if (!reservation.ok()) return reply_error(res, reservation.error());
    reply_json(res, json{{"slot_id", reservation.value().slot_id},
                         {"nonce", to_base64(ByteView(reservation.value().nonce.data(),
                                                      reservation.value().nonce.size()))}});
  });

  s.Post(R"(/gangs/([0-9a-f]{64})/register)", [this](const httplib::Request& req,
                                                     httplib::Response& res) {
    auto gid = path_digest(req, res);
    if (!gid) return;
    auto body = body_json(req, res);
    if (!body) return;
    auto slot = wire::parse_u64(body->value("slot_id", json()));
    if (!slot.ok()) return reply_error(res, "slot_id: " + slot.error());
    auto report = wire::parse_report(body->value("report", json()));
    if (!report.ok()) return reply_error(res, report.error());
    auto cert = platform_.register_member(*gid, slot.value(), report.value());
    if (!cert.ok()) return reply_error(res, cert.error());
    reply_json(res, json{{"certificate", wire::to_json(cert.value())}});
  });

  s.Get(R"(/gangs/([0-9a-f]{64})/members)", [this](const httplib::Request& req,
                                                   httplib::Response& res) {
    auto gid = path_digest(req, res);
    if (!gid) return;
    auto members = platform_.members(*gid);
    if (!members.ok()) return reply_error(res, members.error(), 404);
    auto document = platform_.member_list_document(*gid);
    json out = json::array();
    for (const gang::MemberRecord& m : members.value()) out.push_back(wire::to_json(m));
    reply_json(res, json{{"members", out},
                         {"signed_document",
                          document.ok() ? to_base64(ByteView(document.value())) : ""}});
  });

  s.Get("/listings", [this](const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    for (const market::TradeListing& l : platform_.listings()) out.push_back(wire::to_json(l));
    reply_json(res, json{{"listings", out}});
  });

  s.Post("/listings", [this](const httplib::Request& req, httplib::Response& res) {
    auto body = body_json(req, res);
    if (!body) return;
    auto draft = wire::parse_listing_draft(*body);
    if (!draft.ok()) return reply_error(res, draft.error());
    auto posted = platform_.post_listing(draft.value());
    if (!posted.ok()) return reply_error(res, posted.error());
    reply_json(res, json{{"listing_id", posted.value()}});
  });

  s.Get(R"(/trades/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
    auto id = path_u64(req, res);
    if (!id) return;
    auto trade = platform_.trade(*id);
    if (!trade.ok()) return reply_error(res, trade.error(), 404);
    reply_json(res, wire::to_json(trade.value()));
  });

  s.Post(R"(/trades/(\d+)/lock)", [this](const httplib::Request& req, httplib::Response& res) {
    auto id = path_u64(req, res);
    if (!id) return;
    auto body = body_json(req, res);
    if (!body) return;
    auto buyer = wire::parse_public(body->value("buyer", json()));
    auto amount = wire::parse_u64(body->value("amount", json()));
    auto sig = wire::parse_signature(body->value("buyer_signature", json()));
    if (!buyer.ok()) return reply_error(res, "buyer: " + buyer.error());
    if (!amount.ok()) return reply_error(res, "amount: " + amount.error());
    if (!sig.ok()) return reply_error(res, "buyer_signature: " + sig.error());
    std::string key = body->value("idempotency_key", "");
    auto trade = platform_.lock_funds(*id, buyer.value(), amount.value(), key, sig.value());
    if (!trade.ok()) return reply_error(res, trade.error());
    reply_json(res, json{{"trade_id", trade.value()}, {"stage", "locked"}});
  });

  s.Post(R"(/trades/(\d+)/receipt)", [this](const httplib::Request& req, httplib::Response& res) {
    auto id = path_u64(req, res);
    if (!id) return;
    auto body = body_json(req, res);
    if (!body) return;
    auto receipt = wire::parse_receipt(body->value("receipt", json()));
    if (!receipt.ok()) return reply_error(res, receipt.error());
    std::optional<enclave::PurchaseToken> token;
    if (body->contains("token")) {
      auto parsed = wire::parse_token(body->at("token"));
      if (!parsed.ok()) return reply_error(res, parsed.error());
      token = parsed.value();
    }
    auto stage = platform_.submit_receipt(*id, receipt.value(), token);
    if (!stage.ok()) return reply_error(res, stage.error());
    reply_json(res, json{{"stage", market::stage_name(stage.value())}});
  });

  s.Post(R"(/trades/(\d+)/dispute)", [this](const httplib::Request& req, httplib::Response& res) {
    auto id = path_u64(req, res);
    if (!id) return;
    auto body = body_json(req, res);
    if (!body) return;
    auto party = wire::parse_public(body->value("party", json()));
    if (!party.ok()) return reply_error(res, "party: " + party.error());
    Status status = platform_.dispute(*id, party.value());
    if (!status.ok()) return reply_error(res, status.error());
    reply_json(res, json{{"stage", "disputed"}});
  });

  s.Post(R"(/trades/(\d+)/resolve)", [this](const httplib::Request& req, httplib::Response& res) {
    auto id = path_u64(req, res);
    if (!id) return;
    auto body = body_json(req, res);
    if (!body) return;
    if (body->value("timeout", false)) {
      Status status = platform_.refund_timeout(*id);
      if (!status.ok()) return reply_error(res, status.error());
      return reply_json(res, json{{"stage", "refunded"}});
    }
    std::string outcome = body->value("outcome", "");
    if (outcome != "settled" && outcome != "refunded") {
      return reply_error(res, "outcome must be \"settled\" or \"refunded\"");
    }
    auto sig = wire::parse_signature(body->value("arbiter_signature", json()));
    if (!sig.ok()) return reply_error(res, "arbiter_signature: " + sig.error());
    Status status = platform_.resolve(*id, outcome == "settled", sig.value());
    if (!status.ok()) return reply_error(res, status.error());
    reply_json(res, json{{"stage", outcome}});
  });

  s.Post("/tokens/redeem", [this](const httplib::Request& req, httplib::Response& res) {
    auto body = body_json(req, res);
    if (!body) return;
    auto token = wire::parse_token(*body);
    if (!token.ok()) return reply_error(res, token.error());
    Status status = platform_.redeem_token(token.value());
    if (!status.ok()) return reply_error(res, status.error());
    reply_json(res, json{{"eligible", true}});
  });

  s.Post("/reviews", [this](const httplib::Request& req, httplib::Response& res) {
    auto body = body_json(req, res);
    if (!body) return;
    auto seller = wire::parse_public(body->value("seller", json()));
    auto trade = wire::parse_u64(body->value("trade_id", json()));
    auto buyer = wire::parse_public(body->value("buyer", json()));
    auto rating = wire::parse_u64(body->value("rating", json()));
    auto sig = wire::parse_signature(body->value("buyer_signature", json()));
    if (!seller.ok() || !trade.ok() || !buyer.ok() || !rating.ok() || !sig.ok()) {
      return reply_error(res, "review requires seller, trade_id, buyer, rating, buyer_signature");
    }
    std::string comment = body->value("comment", "");
    Status status = platform_.submit_review(seller.value(), trade.value(), buyer.value(),
                                            static_cast<uint32_t>(rating.value()), comment,
                                            sig.value());
    if (!status.ok()) return reply_error(res, status.error());
    reply_json(res, json{{"recorded", true}});
  });

  s.Get(R"(/reputation/([0-9a-f]{64}))", [this](const httplib::Request& req,
                                                httplib::Response& res) {
    auto seller = crypto::PublicIdentity::from_bytes(
        ByteView(from_hex(req.matches[1].str()).value_or(Bytes{})));
    if (!seller) return reply_error(res, "malformed seller key", 404);
    reply_json(res, wire::to_json(platform_.reputation(*seller)));
  });

  s.Post("/anchors", [this](const httplib::Request& req, httplib::Response& res) {
    auto body = body_json(req, res);
    if (!body) return;
    auto anchor = wire::parse_anchor(*body);
    if (!anchor.ok()) return reply_error(res, anchor.error());
    auto position = platform_.record_anchor(anchor.value());
    if (!position.ok()) return reply_error(res, position.error());
    reply_json(res, json{{"position", position.value()}});
  });

  s.Get("/anchors", [this](const httplib::Request& req, httplib::Response& res) {
    std::optional<crypto::PublicIdentity> agent;
    if (req.has_param("agent")) {
      auto raw = from_hex(req.get_param_value("agent"));
      auto parsed = raw ? crypto::PublicIdentity::from_bytes(ByteView(*raw)) : std::nullopt;
      if (!parsed) return reply_error(res, "malformed agent key");
      agent = *parsed;
    }
    json out = json::array();
    for (const market::AnchorEntry& entry : platform_.anchors(agent)) {
      out.push_back(wire::to_json(entry, platform_.classify_anchor(entry)));
    }
    reply_json(res, json{{"anchors", out}});
  });

  s.Post("/trace/verify", [this](const httplib::Request& req, httplib::Response& res) {
    auto body = body_json(req, res);
    if (!body) return;
    auto manifest = wire::parse_manifest(body->value("manifest", json()));
    if (!manifest.ok()) return reply_error(res, manifest.error());
    std::optional<ledger::AnchoredRoot> current;
    if (body->contains("current_root")) {
      auto root = wire::parse_root(body->at("current_root"));
      if (!root.ok()) return reply_error(res, root.error());
      current = root.value();
    }
    reply_json(res, wire::to_json(platform_.verify_trace(manifest.value(), current)));
  });

  s.Get("/bulletin", [this](const httplib::Request&, httplib::Response& res) {
    json vulns = json::array();
    for (const market::VulnerabilityEntry& v : platform_.vulnerabilities()) {
      vulns.push_back(wire::to_json(v));
    }
    json anchors = json::array();
    for (const market::AnchorEntry& entry : platform_.anchors()) {
      anchors.push_back(wire::to_json(entry, platform_.classify_anchor(entry)));
    }
    reply_json(res, json{{"vulnerabilities", vulns}, {"anchors", anchors}});
  });

  s.Post("/bulletin", [this](const httplib::Request& req, httplib::Response& res) {
    auto body = body_json(req, res);
    if (!body) return;
    auto version = wire::parse_u64(body->value("affected_version", json()));
    auto sig = wire::parse_signature(body->value("operator_signature", json()));
    if (!version.ok()) return reply_error(res, "affected_version: " + version.error());
    if (!sig.ok()) return reply_error(res, "operator_signature: " + sig.error());
    std::string note = body->value("note", "");
    Status status = platform_.publish_vulnerability(version.value(), note, sig.value());
    if (!status.ok()) return reply_error(res, status.error());
    reply_json(res, json{{"published", true}});
  });

  s.Post("/accounts/open", [this](const httplib::Request& req, httplib::Response& res) {
    auto body = body_json(req, res);
    if (!body) return;
    auto account = wire::parse_public(body->value("account", json()));
    if (!account.ok()) return reply_error(res, account.error());
    Status status = platform_.open_account(account.value());
    if (!status.ok()) return reply_error(res, status.error());
    reply_json(res, json{{"opened", true}});
  });

  s.Post("/accounts/deposit", [this](const httplib::Request& req, httplib::Response& res) {
    auto body = body_json(req, res);
    if (!body) return;
    auto account = wire::parse_public(body->value("account", json()));
    auto amount = wire::parse_u64(body->value("amount", json()));
    if (!account.ok()) return reply_error(res, account.error());
    if (!amount.ok()) return reply_error(res, "amount: " + amount.error());
    Status status = platform_.deposit(account.value(), amount.value());
    if (!status.ok()) return reply_error(res, status.error());
    auto balance = platform_.balance_of(account.value());
    reply_json(res, json{{"balance", balance.ok() ? balance.value() : 0}});
  });

  s.Get(R"(/accounts/([0-9a-f]{64}))", [this](const httplib::Request& req,
                                              httplib::Response& res) {
    auto raw = from_hex(req.matches[1].str());
    auto account = raw ? crypto::PublicIdentity::from_bytes(ByteView(*raw)) : std::nullopt;
    if (!account) return reply_error(res, "malformed account key", 404);
    auto balance = platform_.balance_of(*account);
    if (!balance.ok()) return reply_error(res, balance.error(), 404);
    reply_json(res, json{{"balance", balance.value()}});
  });

  s.Get("/platform", [this](const httplib::Request&, httplib::Response& res) {
    reply_json(res, json{{"platform_public", platform_.platform_public().hex()},
                         {"vendor_root_public", platform_.vendor_root_public().hex()}});
  });
}

Result<int> PlatformService::start(const std::string& host, int port) {
  using R = Result<int>;
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
    if (port_ < 0) return R::failure("cannot bind to a free port on " + host);
  } else {
    if (!server_->bind_to_port(host, port)) {
      return R::failure("cannot bind " + host + ":" + std::to_string(port));
    }
    port_ = port;
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void PlatformService::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

Status PlatformService::run(const std::string& host, int port) {
  if (!server_->bind_to_port(host, port)) {
    return Status::failure("cannot bind " + host + ":" + std::to_string(port));
  }
  port_ = port;
  if (!server_->listen_after_bind()) {
    return Status::failure("server stopped unexpectedly");
  }
  return Status();
}

}  // namespace memtrade::service
