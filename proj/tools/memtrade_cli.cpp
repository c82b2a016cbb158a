// memtrade command-line front end: platform service, gang lifecycle, agent
// runs against the bundled mock provider, listings, trades, verification,
// and the scripted end-to-end scenarios.
//
// Exit codes: 0 success, 1 verification failure, 2 usage error.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "memtrade/client.hpp"
#include "memtrade/delivery.hpp"
#include "memtrade/scenario.hpp"
#include "memtrade/service.hpp"
#include "memtrade/simroot.hpp"
#include "memtrade/wire.hpp"

namespace fs = std::filesystem;
using namespace memtrade;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;

struct GlobalOptions {
  std::string platform_url = "http://127.0.0.1:8787";
  std::string state_dir = "memtrade-state";
  std::optional<uint64_t> seed;
  bool json_output = false;
};

Rng make_rng(const GlobalOptions& g) {
  // Seeded mode is for reproducible demos/tests only; keys drawn from it
  // are predictable.
  if (g.seed) return Rng::seeded(*g.seed);
  return Rng::system();
}

fs::path keys_dir(const GlobalOptions& g) {
  return fs::path(g.state_dir) / "keys";
}

Result<Bytes> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return Result<Bytes>::failure("cannot read " + path.string());
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return data;
}

Status write_file(const fs::path& path, ByteView data) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return Status::failure("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  return Status();
}

// Key files hold a 32-byte seed as hex. Created on demand.
Result<crypto::KeyPair> load_or_create_key(const GlobalOptions& g, const std::string& name,
                                           Rng& rng) {
  using R = Result<crypto::KeyPair>;
  fs::path path = keys_dir(g) / (name + ".seed.hex");
  if (fs::exists(path)) {
    auto data = read_file(path);
    if (!data.ok()) return R::failure(data.error());
    std::string hex(data.value().begin(), data.value().end());
    while (!hex.empty() && (hex.back() == '\n' || hex.back() == '\r')) hex.pop_back();
    auto raw = from_hex(hex);
    if (!raw || raw->size() != 32) return R::failure("malformed key file " + path.string());
    std::array<uint8_t, 32> seed{};
    std::copy(raw->begin(), raw->end(), seed.begin());
    return crypto::KeyPair::from_seed(seed);
  }
  std::array<uint8_t, 32> seed = rng.bytes32();
  std::string hex = to_hex(ByteView(seed.data(), seed.size())) + "\n";
  Status written = write_file(path, ByteView(to_bytes(hex)));
  if (!written.ok()) return R::failure(written.error());
  return crypto::KeyPair::from_seed(seed);
}

// Simulation shortcut: the mock provider's key is derived from the gang's
// task + model so every state dir can run the provider locally.
crypto::KeyPair derive_provider_key(const std::string& model_name, const std::string& task) {
  crypto::Digest d =
      crypto::digest(crypto::DomainTag::Field, to_bytes("sim-provider:" + model_name + ":" + task));
  return crypto::KeyPair::from_seed(d.v);
}

Result<Bytes> load_credential(const GlobalOptions& g, Rng& rng) {
  fs::path path = keys_dir(g) / "provider.credential.hex";
  if (fs::exists(path)) {
    auto data = read_file(path);
    if (!data.ok()) return Result<Bytes>::failure(data.error());
    std::string hex(data.value().begin(), data.value().end());
    while (!hex.empty() && (hex.back() == '\n' || hex.back() == '\r')) hex.pop_back();
    auto raw = from_hex(hex);
    if (!raw) return Result<Bytes>::failure("malformed credential file");
    return *raw;
  }
  Bytes credential = rng.bytes(24);
  write_file(path, ByteView(to_bytes(to_hex(ByteView(credential)) + "\n")));
  return credential;
}

Status save_json(const fs::path& path, const json& j) {
  return write_file(path, ByteView(to_bytes(j.dump(2) + "\n")));
}

Result<json> load_json(const fs::path& path) {
  auto data = read_file(path);
  if (!data.ok()) return Result<json>::failure(data.error());
  json parsed = json::parse(to_string(ByteView(data.value())), nullptr, false);
  if (parsed.is_discarded()) return Result<json>::failure("malformed JSON in " + path.string());
  return parsed;
}

struct AgentState {
  enclave::Enclave enclave_;
  gang::MembershipCertificate cert;
  gang::GangTemplate tmpl;
};

fs::path enclave_state_path(const GlobalOptions& g) {
  return fs::path(g.state_dir) / "enclave.state";
}

Status save_agent(const GlobalOptions& g, const enclave::Enclave& enclave_) {
  return write_file(enclave_state_path(g), ByteView(enclave_.serialize_state()));
}

Result<AgentState> load_agent(const GlobalOptions& g) {
  using R = Result<AgentState>;
  auto data = read_file(enclave_state_path(g));
  if (!data.ok()) return R::failure("no agent in this state dir (run `gang join` first)");
  auto enclave_ = enclave::Enclave::restore_state(ByteView(data.value()),
                                                  simroot::sim_vendor_root());
  if (!enclave_.ok()) return R::failure(enclave_.error());
  auto cert_json = load_json(fs::path(g.state_dir) / "cert.json");
  if (!cert_json.ok()) return R::failure(cert_json.error());
  auto cert = wire::parse_certificate(cert_json.value());
  if (!cert.ok()) return R::failure(cert.error());
  auto tmpl_json = load_json(fs::path(g.state_dir) / "gang.json");
  if (!tmpl_json.ok()) return R::failure(tmpl_json.error());
  auto tmpl = wire::parse_template(tmpl_json.value());
  if (!tmpl.ok()) return R::failure(tmpl.error());
  return AgentState{std::move(enclave_).take(), cert.value(), tmpl.value()};
}

int fail(const std::string& message, int code = kExitUsage) {
  std::cerr << "error: " << message << "\n";
  return code;
}

std::vector<uint64_t> parse_selection(const std::string& spec, uint64_t log_size) {
  std::vector<uint64_t> out;
  if (spec == "all") {
    for (uint64_t i = 0; i < log_size; ++i) out.push_back(i);
    return out;
  }
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoull(item));
  }
  return out;
}

Result<ledger::DisclosurePolicy> parse_policy(const std::string& spec) {
  using R = Result<ledger::DisclosurePolicy>;
  if (spec == "all") return ledger::open_all();
  if (spec == "none") return ledger::hide_all();
  ledger::DisclosurePolicy policy = ledger::hide_all();
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    bool found = false;
    for (size_t f = 0; f < ledger::kFieldCount; ++f) {
      if (item == ledger::kFieldNames[f]) {
        policy[f] = ledger::FieldDisclosure::Open;
        found = true;
      }
    }
    if (!found) return R::failure("unknown field in --open: " + item);
  }
  return policy;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"certified agent memory and its trade market"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  GlobalOptions g;
  app.add_option("--platform-url", g.platform_url, "platform base URL");
  app.add_option("--state-dir", g.state_dir, "local state directory");
  app.add_option("--seed", g.seed, "deterministic RNG seed (test mode, insecure keys)");
  app.add_flag("--json", g.json_output, "machine-readable JSON output");

  int exit_code = kExitOk;
  auto set_exit = [&](int code) { exit_code = code; };

  // ---- platform ----
  auto* platform_cmd = app.add_subcommand("platform", "run the coordination service");
  auto* serve = platform_cmd->add_subcommand("serve", "serve the platform API");
  std::string listen_host = "127.0.0.1";
  int listen_port = 8787;
  serve->add_option("--listen", listen_host, "bind address");
  serve->add_option("--port", listen_port, "bind port");
  serve->callback([&] {
    Rng rng = make_rng(g);
    auto key = load_or_create_key(g, "platform", rng);
    if (!key.ok()) return set_exit(fail(key.error()));
    market::Platform::Config config;
    config.platform_key = key.value();
    config.vendor_root = simroot::sim_vendor_root().public_id();
    config.journal_path = (fs::path(g.state_dir) / "journal.bin").string();
    fs::create_directories(g.state_dir);
    if (g.seed) config.rng = Rng::seeded(*g.seed ^ 0x9e3779b97f4a7c15ull);
    auto platform = market::Platform::create(std::move(config));
    if (!platform.ok()) return set_exit(fail(platform.error()));
    market::Platform instance = std::move(platform).take();
    service::PlatformService svc(instance);
    std::cout << "platform key: " << instance.platform_public().hex() << "\n"
              << "vendor root:  " << instance.vendor_root_public().hex() << "\n"
              << "journal:      " << (fs::path(g.state_dir) / "journal.bin").string() << "\n"
              << "listening on http://" << listen_host << ":" << listen_port << "\n";
    Status run = svc.run(listen_host, listen_port);
    if (!run.ok()) set_exit(fail(run.error(), 1));
  });

  auto* vuln = platform_cmd->add_subcommand("vuln", "publish a vulnerability bulletin entry");
  uint64_t vuln_version = 0;
  std::string vuln_note;
  vuln->add_option("--affected", vuln_version, "affected security version")->required();
  vuln->add_option("--note", vuln_note, "advisory note");
  vuln->callback([&] {
    Rng rng = make_rng(g);
    auto key = load_or_create_key(g, "platform", rng);
    if (!key.ok()) return set_exit(fail(key.error()));
    crypto::Signature sig = key.value().sign(
        crypto::DomainTag::Bulletin, ByteView(market::vulnerability_payload(vuln_version, vuln_note)));
    client::PlatformClient client(g.platform_url);
    Status status = client.publish_vulnerability(vuln_version, vuln_note, sig);
    if (!status.ok()) return set_exit(fail(status.error(), 1));
    std::cout << "published\n";
  });

  // ---- gang ----
  auto* gang_cmd = app.add_subcommand("gang", "gang lifecycle");
  auto* gang_create = gang_cmd->add_subcommand("create", "publish a gang template");
  std::string task, code_ref = "gangs/main", model_name = "mock-model-1", image_label = "image:v1";
  uint64_t min_version = 1;
  bool resale = false, full_prompt = false;
  gang_create->add_option("--task", task, "task description")->required();
  gang_create->add_option("--code-ref", code_ref, "repository branch locator");
  gang_create->add_option("--model", model_name, "model name");
  gang_create->add_option("--image", image_label, "image template label (hashed)");
  gang_create->add_option("--min-version", min_version, "minimum security version");
  gang_create->add_flag("--resale", resale, "allow resale confirmations");
  gang_create->add_flag("--full-prompt-disclosure", full_prompt, "policy allows full prompts");
  gang_create->callback([&] {
    gang::GangTemplate tmpl;
    tmpl.task_description = task;
    tmpl.image_template_hash = crypto::digest(crypto::DomainTag::Field, to_bytes(image_label));
    tmpl.model_provider =
        enclave::ProviderPublic{"mock://provider",
                                derive_provider_key(model_name, task).public_id(), model_name};
    tmpl.trade_policy.resale_allowed = resale;
    tmpl.trade_policy.full_prompt_disclosure = full_prompt;
    tmpl.code_reference = code_ref;
    tmpl.min_security_version = min_version;
    client::PlatformClient client(g.platform_url);
    auto created = client.create_gang(tmpl);
    if (!created.ok()) return set_exit(fail(created.error(), 1));
    save_json(fs::path(g.state_dir) / "gang.json", wire::to_json(tmpl));
    std::cout << (g.json_output ? json{{"gang_id", created.value().hex()}}.dump(2)
                                : "gang id: " + created.value().hex())
              << "\n";
  });

  auto* gang_join = gang_cmd->add_subcommand("join", "register an agent in a gang");
  std::string join_gang_hex;
  uint64_t join_version = 1;
  gang_join->add_option("--gang", join_gang_hex, "gang id (hex)")->required();
  gang_join->add_option("--version", join_version, "security version to attest");
  gang_join->callback([&] {
    auto gid = crypto::Digest::from_hex_str(join_gang_hex);
    if (!gid) return set_exit(fail("malformed gang id"));
    client::PlatformClient client(g.platform_url);
    auto all = client.gangs();
    if (!all.ok()) return set_exit(fail(all.error(), 1));
    const gang::GangTemplate* tmpl = nullptr;
    for (const gang::GangTemplate& t : all.value()) {
      if (t.gang_id() == *gid) tmpl = &t;
    }
    if (!tmpl) return set_exit(fail("gang not found on the platform", 1));

    Rng rng = make_rng(g);
    auto owner = load_or_create_key(g, "owner", rng);
    auto credential = load_credential(g, rng);
    if (!owner.ok() || !credential.ok()) return set_exit(fail("state dir setup failed"));

    auto reservation = client.reserve_slot(*gid);
    if (!reservation.ok()) return set_exit(fail(reservation.error(), 1));

    enclave::BootParams params;
    params.image_template_hash = tmpl->image_template_hash;
    params.task_description_hash = tmpl->task_hash();
    params.slot_id = reservation.value().slot_id;
    params.owner_seed = owner.value().seed();
    params.security_version = join_version;
    params.provider.pub = tmpl->model_provider;
    params.provider.credential = credential.value();
    params.policy.resale_confirmation_allowed = tmpl->trade_policy.resale_allowed;
    params.vendor_root = simroot::sim_vendor_root();
    enclave::Enclave agent = enclave::Enclave::boot(std::move(params), make_rng(g));

    auto cert = client.register_member(*gid, reservation.value().slot_id,
                                       agent.attest(reservation.value().nonce));
    if (!cert.ok()) return set_exit(fail(cert.error(), 1));
    save_agent(g, agent);
    save_json(fs::path(g.state_dir) / "cert.json", wire::to_json(cert.value()));
    save_json(fs::path(g.state_dir) / "gang.json", wire::to_json(*tmpl));
    std::cout << (g.json_output
                      ? wire::to_json(cert.value()).dump(2)
                      : "registered: slot " + std::to_string(cert.value().slot_id) +
                            ", agent " + cert.value().agent_public.hex())
              << "\n";
  });

  auto* gang_members = gang_cmd->add_subcommand("members", "show the member directory");
  std::string members_gang_hex;
  gang_members->add_option("--gang", members_gang_hex, "gang id (hex)")->required();
  gang_members->callback([&] {
    auto gid = crypto::Digest::from_hex_str(members_gang_hex);
    if (!gid) return set_exit(fail("malformed gang id"));
    client::PlatformClient client(g.platform_url);
    auto members = client.members_json(*gid);
    if (!members.ok()) return set_exit(fail(members.error(), 1));
    std::cout << members.value() << "\n";
  });

  // ---- account ----
  auto* account_cmd = app.add_subcommand("account", "credit ledger");
  auto* account_deposit = account_cmd->add_subcommand("deposit", "deposit credits");
  uint64_t deposit_amount = 0;
  std::string account_key_name = "buyer";
  account_deposit->add_option("--amount", deposit_amount, "credits")->required();
  account_deposit->add_option("--key", account_key_name, "key name in the state dir");
  account_deposit->callback([&] {
    Rng rng = make_rng(g);
    auto key = load_or_create_key(g, account_key_name, rng);
    if (!key.ok()) return set_exit(fail(key.error()));
    client::PlatformClient client(g.platform_url);
    client.open_account(key.value().public_id());
    auto balance = client.deposit(key.value().public_id(), deposit_amount);
    if (!balance.ok()) return set_exit(fail(balance.error(), 1));
    std::cout << "balance: " << balance.value() << "\n";
  });
  auto* account_balance = account_cmd->add_subcommand("balance", "show balance");
  account_balance->add_option("--key", account_key_name, "key name in the state dir");
  account_balance->callback([&] {
    Rng rng = make_rng(g);
    auto key = load_or_create_key(g, account_key_name, rng);
    if (!key.ok()) return set_exit(fail(key.error()));
    client::PlatformClient client(g.platform_url);
    auto balance = client.balance_of(key.value().public_id());
    if (!balance.ok()) return set_exit(fail(balance.error(), 1));
    std::cout << "balance: " << balance.value() << "\n";
  });

  // ---- agent ----
  auto* agent_cmd = app.add_subcommand("agent", "drive the registered agent");
  auto* agent_run = agent_cmd->add_subcommand("run", "run model calls through the enclave");
  uint64_t run_calls = 1;
  std::string prompt_prefix = "explore: step";
  agent_run->add_option("--calls", run_calls, "number of calls")->required();
  agent_run->add_option("--prompt-prefix", prompt_prefix, "prompt prefix");
  agent_run->callback([&] {
    auto agent = load_agent(g);
    if (!agent.ok()) return set_exit(fail(agent.error(), 1));
    harness::MockProvider provider(
        derive_provider_key(agent.value().tmpl.model_provider.model_name,
                            agent.value().tmpl.task_description),
        agent.value().tmpl.model_provider.model_name);
    uint64_t start = agent.value().enclave_.log().size();
    for (uint64_t i = 0; i < run_calls; ++i) {
      std::string prompt = prompt_prefix + " " + std::to_string(start + i);
      auto response = agent.value().enclave_.proxy_call(provider, ByteView(to_bytes(prompt)));
      if (!response.ok()) return set_exit(fail(response.error(), 1));
    }
    save_agent(g, agent.value().enclave_);
    const ledger::AnchoredRoot& root = agent.value().enclave_.log().root();
    std::cout << (g.json_output
                      ? json{{"length", root.length}, {"root", root.root.hex()}}.dump(2)
                      : "log length " + std::to_string(root.length) + ", root " + root.root.hex())
              << "\n";
  });

  auto* agent_anchor = agent_cmd->add_subcommand("anchor", "publish an anchor commitment");
  std::optional<uint64_t> anchor_length;
  agent_anchor->add_option("--length", anchor_length, "prefix length (default: full log)");
  agent_anchor->callback([&] {
    auto agent = load_agent(g);
    if (!agent.ok()) return set_exit(fail(agent.error(), 1));
    uint64_t length = anchor_length.value_or(agent.value().enclave_.log().size());
    uint64_t wallclock = static_cast<uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());
    auto commitment = agent.value().enclave_.sign_anchor(length, wallclock);
    if (!commitment.ok()) return set_exit(fail(commitment.error(), 1));
    client::PlatformClient client(g.platform_url);
    auto position = client.record_anchor(commitment.value());
    if (!position.ok()) return set_exit(fail(position.error(), 1));
    std::cout << "anchored at bulletin position " << position.value() << "\n";
  });

  // ---- list ----
  auto* list_cmd = app.add_subcommand("list", "listings");
  auto* list_post = list_cmd->add_subcommand("post", "post a sale listing");
  uint64_t price = 0;
  std::string select_spec = "all", open_spec = "all", ad_open_spec = "prompt";
  std::string attach_file;
  list_post->add_option("--price", price, "price in credits")->required();
  list_post->add_option("--select", select_spec, "interaction selection: all | i,j,k");
  list_post->add_option("--open", open_spec, "opened fields in the sold artifact");
  list_post->add_option("--ad-open", ad_open_spec, "opened fields in the advertisement");
  list_post->add_option("--attach", attach_file, "uncertified attachment file");
  list_post->callback([&] {
    auto agent = load_agent(g);
    if (!agent.ok()) return set_exit(fail(agent.error(), 1));
    enclave::Enclave& enclave_ = agent.value().enclave_;

    std::vector<uint64_t> selection = parse_selection(select_spec, enclave_.log().size());
    auto policy = parse_policy(open_spec);
    auto ad_policy = parse_policy(ad_open_spec);
    if (!policy.ok() || !ad_policy.ok()) return set_exit(fail("bad field spec"));

    std::optional<Bytes> attachment;
    if (!attach_file.empty()) {
      auto data = read_file(attach_file);
      if (!data.ok()) return set_exit(fail(data.error()));
      attachment = data.value();
    }
    auto bundle = enclave_.build_artifact(selection, policy.value(), attachment);
    if (!bundle.ok()) return set_exit(fail(bundle.error(), 1));
    auto ad = enclave_.build_artifact(selection, ad_policy.value());
    if (!ad.ok()) return set_exit(fail(ad.error(), 1));

    Rng rng = make_rng(g);
    delivery::Key key = delivery::make_key(rng);
    Bytes plain = ledger::serialize_bundle(bundle.value());
    Bytes delivered = delivery::encrypt(key, ByteView(plain), rng);

    market::ListingDraft draft;
    draft.seller_cert = agent.value().cert;
    draft.price = price;
    draft.metadata = harness::make_metadata(enclave_.log(), ledger::serialize_bundle(ad.value()));
    draft.resale_allowed = agent.value().tmpl.trade_policy.resale_allowed;
    draft.seller_endpoint = "agent://" + agent.value().cert.agent_public.hex().substr(0, 12);
    draft.encrypted_artifact_hash = ledger::artifact_hash(ByteView(delivered));

    client::PlatformClient client(g.platform_url);
    auto listing = client.post_listing(draft);
    if (!listing.ok()) return set_exit(fail(listing.error(), 1));

    fs::path artifacts = fs::path(g.state_dir) / "artifacts";
    std::string base = "listing-" + std::to_string(listing.value());
    write_file(artifacts / (base + ".delivery.bin"), ByteView(delivered));
    write_file(artifacts / (base + ".key.hex"),
               ByteView(to_bytes(to_hex(ByteView(key.data(), key.size())) + "\n")));
    std::cout << (g.json_output ? json{{"listing_id", listing.value()}}.dump(2)
                                : "listing id: " + std::to_string(listing.value()))
              << "\n";
  });

  auto* list_browse = list_cmd->add_subcommand("browse", "browse listings");
  list_browse->callback([&] {
    client::PlatformClient client(g.platform_url);
    auto all = client.listings();
    if (!all.ok()) return set_exit(fail(all.error(), 1));
    json out = json::array();
    for (const market::TradeListing& l : all.value()) out.push_back(wire::to_json(l));
    if (g.json_output) {
      std::cout << out.dump(2) << "\n";
    } else {
      for (const market::TradeListing& l : all.value()) {
        std::cout << "listing " << l.listing_id << ": " << l.draft.price << " credits, "
                  << l.draft.metadata.interaction_count << " interactions, root "
                  << l.draft.metadata.claimed_root.root.hex().substr(0, 16) << "..., seller "
                  << l.draft.seller_cert.agent_public.hex().substr(0, 12) << "...\n";
      }
    }
  });

  // ---- trade ----
  auto* trade_cmd = app.add_subcommand("trade", "escrowed trades");
  auto* trade_lock = trade_cmd->add_subcommand("lock", "lock funds for a listing");
  uint64_t lock_listing = 0;
  std::string lock_idem = "cli";
  trade_lock->add_option("--listing", lock_listing, "listing id")->required();
  trade_lock->add_option("--idempotency-key", lock_idem, "retry-safe key");
  trade_lock->callback([&] {
    Rng rng = make_rng(g);
    auto buyer = load_or_create_key(g, "buyer", rng);
    if (!buyer.ok()) return set_exit(fail(buyer.error()));
    client::PlatformClient client(g.platform_url);
    auto listings = client.listings();
    if (!listings.ok()) return set_exit(fail(listings.error(), 1));
    const market::TradeListing* listing = nullptr;
    for (const market::TradeListing& l : listings.value()) {
      if (l.listing_id == lock_listing) listing = &l;
    }
    if (!listing) return set_exit(fail("listing not found", 1));
    Bytes payload = market::lock_payload(lock_listing, listing->draft.price, lock_idem);
    auto trade = client.lock_funds(lock_listing, buyer.value().public_id(), listing->draft.price,
                                   lock_idem,
                                   buyer.value().sign(crypto::DomainTag::Account, ByteView(payload)));
    if (!trade.ok()) return set_exit(fail(trade.error(), 1));
    std::cout << "trade " << trade.value() << " locked (" << listing->draft.price
              << " credits in escrow)\n";
  });

  auto* trade_deliver = trade_cmd->add_subcommand(
      "deliver", "deliver the artifact to the buyer and obtain the enclave receipt");
  uint64_t deliver_trade = 0;
  std::string deliver_out = "artifact.delivery.bin", deliver_key_out = "artifact.key.hex";
  trade_deliver->add_option("--trade", deliver_trade, "trade id")->required();
  trade_deliver->add_option("--out", deliver_out, "delivery container output path");
  trade_deliver->add_option("--key-out", deliver_key_out, "decryption key output path");
  trade_deliver->callback([&] {
    auto agent = load_agent(g);
    if (!agent.ok()) return set_exit(fail(agent.error(), 1));
    client::PlatformClient client(g.platform_url);
    auto trade_json_str = client.trade_json(deliver_trade);
    if (!trade_json_str.ok()) return set_exit(fail(trade_json_str.error(), 1));
    json trade = json::parse(trade_json_str.value());
    auto buyer = wire::parse_public(trade.value("buyer", json()));
    if (!buyer.ok()) return set_exit(fail("trade has no buyer yet", 1));

    fs::path artifacts = fs::path(g.state_dir) / "artifacts";
    std::string base = "listing-" + std::to_string(deliver_trade);
    auto delivered = read_file(artifacts / (base + ".delivery.bin"));
    auto key_hex = read_file(artifacts / (base + ".key.hex"));
    if (!delivered.ok() || !key_hex.ok()) {
      return set_exit(fail("no stored delivery blob for this listing (run `list post` here)", 1));
    }
    std::string hex = to_string(ByteView(key_hex.value()));
    while (!hex.empty() && (hex.back() == '\n' || hex.back() == '\r')) hex.pop_back();
    auto key_raw = from_hex(hex);
    if (!key_raw || key_raw->size() != 32) return set_exit(fail("malformed stored key", 1));
    delivery::Key key{};
    std::copy(key_raw->begin(), key_raw->end(), key.begin());

    auto receipt = agent.value().enclave_.issue_receipt(deliver_trade, buyer.value(),
                                                        ByteView(delivered.value()), key);
    if (!receipt.ok()) return set_exit(fail(receipt.error(), 1));
    save_agent(g, agent.value().enclave_);

    write_file(deliver_out, ByteView(delivered.value()));
    write_file(deliver_key_out, ByteView(to_bytes(hex + "\n")));
    json receipt_json{{"receipt", wire::to_json(receipt.value().receipt)},
                      {"token", wire::to_json(receipt.value().token)}};
    save_json(artifacts / ("trade-" + std::to_string(deliver_trade) + ".receipt.json"),
              receipt_json);
    std::cout << "delivered " << deliver_out << " (key in " << deliver_key_out
              << "); receipt stored\n";
  });

  auto* trade_receipt = trade_cmd->add_subcommand("receipt", "submit the delivery receipt");
  uint64_t receipt_trade = 0;
  std::string receipt_file;
  trade_receipt->add_option("--trade", receipt_trade, "trade id")->required();
  trade_receipt->add_option("--receipt", receipt_file, "receipt JSON (default: state dir)");
  trade_receipt->callback([&] {
    fs::path path = receipt_file.empty()
                        ? fs::path(g.state_dir) / "artifacts" /
                              ("trade-" + std::to_string(receipt_trade) + ".receipt.json")
                        : fs::path(receipt_file);
    auto body = load_json(path);
    if (!body.ok()) return set_exit(fail(body.error(), 1));
    auto receipt = wire::parse_receipt(body.value().value("receipt", json()));
    if (!receipt.ok()) return set_exit(fail(receipt.error(), 1));
    std::optional<enclave::PurchaseToken> token;
    if (body.value().contains("token")) {
      auto parsed = wire::parse_token(body.value().at("token"));
      if (parsed.ok()) token = parsed.value();
    }
    client::PlatformClient client(g.platform_url);
    auto stage = client.submit_receipt(receipt_trade, receipt.value(), token);
    if (!stage.ok()) return set_exit(fail(stage.error(), 1));
    std::cout << "trade " << receipt_trade << " " << stage.value() << "\n";
  });

  auto* trade_dispute = trade_cmd->add_subcommand("dispute", "dispute a locked trade");
  uint64_t dispute_trade = 0;
  std::string dispute_key = "buyer";
  trade_dispute->add_option("--trade", dispute_trade, "trade id")->required();
  trade_dispute->add_option("--key", dispute_key, "disputing party key name");
  trade_dispute->callback([&] {
    Rng rng = make_rng(g);
    auto key = load_or_create_key(g, dispute_key, rng);
    if (!key.ok()) return set_exit(fail(key.error()));
    client::PlatformClient client(g.platform_url);
    Status status = client.dispute(dispute_trade, key.value().public_id());
    if (!status.ok()) return set_exit(fail(status.error(), 1));
    std::cout << "trade " << dispute_trade << " disputed\n";
  });

  auto* trade_resolve = trade_cmd->add_subcommand("resolve", "resolve a dispute (operator)");
  uint64_t resolve_trade = 0;
  std::string resolve_outcome;
  trade_resolve->add_option("--trade", resolve_trade, "trade id")->required();
  trade_resolve->add_option("--outcome", resolve_outcome, "settled | refunded")->required();
  trade_resolve->callback([&] {
    if (resolve_outcome != "settled" && resolve_outcome != "refunded") {
      return set_exit(fail("outcome must be settled or refunded"));
    }
    Rng rng = make_rng(g);
    auto key = load_or_create_key(g, "platform", rng);
    if (!key.ok()) return set_exit(fail(key.error()));
    crypto::Signature sig =
        key.value().sign(crypto::DomainTag::Bulletin,
                         ByteView(market::resolve_payload(resolve_trade,
                                                          resolve_outcome == "settled")));
    client::PlatformClient client(g.platform_url);
    Status status = client.resolve(resolve_trade, resolve_outcome, sig);
    if (!status.ok()) return set_exit(fail(status.error(), 1));
    std::cout << "trade " << resolve_trade << " " << resolve_outcome << "\n";
  });

  // ---- verify ----
  auto* verify_cmd = app.add_subcommand("verify", "offline verification");
  auto* verify_artifact = verify_cmd->add_subcommand("artifact", "verify an artifact container");
  std::string artifact_file, artifact_key_hex, expect_root_hex, expect_config_hex,
      expect_agent_hex;
  std::optional<uint64_t> expect_length;
  verify_artifact->add_option("file", artifact_file, "artifact container")->required();
  verify_artifact->add_option("--key", artifact_key_hex, "decryption key hex (encrypted input)");
  verify_artifact->add_option("--root", expect_root_hex, "expected root hex");
  verify_artifact->add_option("--length", expect_length, "expected root length");
  verify_artifact->add_option("--gang-config", expect_config_hex, "expected gang config hash");
  verify_artifact->add_option("--agent", expect_agent_hex, "expected agent public key");
  verify_artifact->callback([&] {
    auto data = read_file(artifact_file);
    if (!data.ok()) return set_exit(fail(data.error()));
    Bytes container = data.value();
    if (!artifact_key_hex.empty()) {
      auto raw = from_hex(artifact_key_hex);
      if (!raw || raw->size() != 32) return set_exit(fail("malformed --key"));
      delivery::Key key{};
      std::copy(raw->begin(), raw->end(), key.begin());
      auto decrypted = delivery::decrypt(key, ByteView(container));
      if (!decrypted.ok()) return set_exit(fail(decrypted.error(), 1));
      container = decrypted.value();
    }
    auto bundle = ledger::parse_bundle(ByteView(container));
    if (!bundle) {
      std::cout << "[FAIL] parse_container: malformed artifact container\nresult: REJECT\n";
      return set_exit(kExitVerifyFailed);
    }
    // External expectations default to the container's own claims; supply
    // --root/--gang-config/--agent to pin them from a listing or certificate.
    ledger::AnchoredRoot expected = bundle->artifact.claimed_root;
    ledger::GenesisInputs genesis = bundle->artifact.claimed_genesis;
    bool pinned = false;
    if (!expect_root_hex.empty()) {
      auto d = crypto::Digest::from_hex_str(expect_root_hex);
      if (!d) return set_exit(fail("malformed --root"));
      expected.root = *d;
      expected.length = expect_length.value_or(expected.length);
      pinned = true;
    }
    if (!expect_config_hex.empty()) {
      auto d = crypto::Digest::from_hex_str(expect_config_hex);
      if (!d) return set_exit(fail("malformed --gang-config"));
      genesis.gang_config_hash = *d;
      pinned = true;
    }
    if (!expect_agent_hex.empty()) {
      auto raw = from_hex(expect_agent_hex);
      auto p = raw ? crypto::PublicIdentity::from_bytes(ByteView(*raw)) : std::nullopt;
      if (!p) return set_exit(fail("malformed --agent"));
      genesis.agent = *p;
      pinned = true;
    }
    ledger::VerificationReport report = ledger::verify_artifact(*bundle, expected, genesis);
    if (g.json_output) {
      std::cout << wire::to_json(report).dump(2) << "\n";
    } else {
      if (!pinned) {
        std::cout << "[note] verifying against the container's own claims; pin --root/--agent "
                     "from a listing or certificate for a binding check\n";
      }
      std::cout << report.to_string();
    }
    if (!report.ok()) set_exit(kExitVerifyFailed);
  });

  auto* verify_trace = verify_cmd->add_subcommand("trace", "verify a trace manifest");
  std::string trace_file;
  std::string trace_root_hex;
  std::optional<uint64_t> trace_length;
  verify_trace->add_option("file", trace_file, "manifest JSON")->required();
  verify_trace->add_option("--current-root", trace_root_hex, "owner's current root hex");
  verify_trace->add_option("--current-length", trace_length, "owner's current log length");
  verify_trace->callback([&] {
    auto body = load_json(trace_file);
    if (!body.ok()) return set_exit(fail(body.error()));
    auto manifest = wire::parse_manifest(body.value());
    if (!manifest.ok()) return set_exit(fail(manifest.error(), 1));
    std::optional<ledger::AnchoredRoot> current;
    if (!trace_root_hex.empty() && trace_length) {
      auto d = crypto::Digest::from_hex_str(trace_root_hex);
      if (!d) return set_exit(fail("malformed --current-root"));
      current = ledger::AnchoredRoot{*trace_length, *d};
    }
    client::PlatformClient client(g.platform_url);
    auto report = client.verify_trace_json(manifest.value(), current);
    if (!report.ok()) return set_exit(fail(report.error(), 1));
    std::cout << report.value() << "\n";
    json parsed = json::parse(report.value(), nullptr, false);
    if (!parsed.is_discarded() && !parsed.value("accepted", false)) {
      set_exit(kExitVerifyFailed);
    }
  });

  auto* verify_cert = verify_cmd->add_subcommand("cert", "verify a membership certificate");
  std::string cert_file;
  verify_cert->add_option("file", cert_file, "certificate JSON")->required();
  verify_cert->callback([&] {
    auto body = load_json(cert_file);
    if (!body.ok()) return set_exit(fail(body.error()));
    auto cert = wire::parse_certificate(body.value());
    if (!cert.ok()) return set_exit(fail(cert.error(), 1));
    client::PlatformClient client(g.platform_url);
    auto platform_pub = client.platform_public();
    if (!platform_pub.ok()) return set_exit(fail(platform_pub.error(), 1));
    bool sig_ok = gang::verify_certificate(cert.value(), platform_pub.value());
    bool directory_ok = false;
    auto members = client.members_json(cert.value().gang_id);
    if (members.ok()) {
      json parsed = json::parse(members.value(), nullptr, false);
      for (const json& m : parsed.value("members", json::array())) {
        const json& c = m.value("certificate", json::object());
        if (c.value("agent_public", "") == cert.value().agent_public.hex() &&
            c.value("slot_id", ~0ull) == cert.value().slot_id &&
            m.value("status", "") == "active" &&
            c.value("platform_signature", "") == to_hex(cert.value().platform_signature.view())) {
          directory_ok = true;
        }
      }
    }
    std::cout << (sig_ok ? "[ok]   platform signature\n" : "[FAIL] platform signature\n");
    std::cout << (directory_ok ? "[ok]   active in the member directory\n"
                               : "[FAIL] active in the member directory\n");
    std::cout << (sig_ok && directory_ok ? "result: ACCEPT\n" : "result: REJECT\n");
    if (!(sig_ok && directory_ok)) set_exit(kExitVerifyFailed);
  });

  // ---- scenario ----
  auto* scenario_cmd = app.add_subcommand("scenario", "scripted end-to-end flows");
  auto* scenario_cleaning_cmd = scenario_cmd->add_subcommand("cleaning", "crowdfunded cleaning");
  scenario_cleaning_cmd->callback([&] {
    harness::ScenarioReport report = harness::scenario_cleaning(g.seed.value_or(1));
    std::cout << (g.json_output ? report.to_json_string() : report.to_string()) << "\n";
    if (!report.ok()) set_exit(kExitVerifyFailed);
  });
  auto* scenario_exploration_cmd =
      scenario_cmd->add_subcommand("exploration", "open-ended exploration");
  scenario_exploration_cmd->callback([&] {
    harness::ScenarioReport report = harness::scenario_exploration(g.seed.value_or(1));
    std::cout << (g.json_output ? report.to_json_string() : report.to_string()) << "\n";
    if (!report.ok()) set_exit(kExitVerifyFailed);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const std::exception& e) {
    return fail(e.what(), 1);
  }
  return exit_code;
}
