#include "memtrade/provider.hpp"

#include <cctype>

namespace memtrade::harness {

MockProvider::MockProvider(crypto::KeyPair key, std::string model_name)
    : key_(std::move(key)), model_name_(std::move(model_name)) {}

enclave::ProviderPublic MockProvider::public_config(const std::string& endpoint) const {
  return enclave::ProviderPublic{endpoint, key_.public_id(), model_name_};
}

enclave::ProviderHello MockProvider::hello(const std::array<uint8_t, 16>& nonce) {
  enclave::ProviderHello out;
  out.provider_public = key_.public_id();
  out.model_name = model_name_;
  Bytes payload = enclave::hello_payload(nonce, model_name_);
  out.signature = key_.sign(crypto::DomainTag::Hello, ByteView(payload));
  return out;
}

uint64_t MockProvider::whitespace_tokens(ByteView text) {
  uint64_t count = 0;
  bool in_token = false;
  for (uint8_t c : text) {
    bool space = std::isspace(c) != 0;
    if (!space && !in_token) ++count;
    in_token = !space;
  }
  return count;
}

Bytes MockProvider::respond_to(ByteView prompt) {
  // Payload = text after the first ": " separator, else the whole prompt.
  std::string text = to_string(prompt);
  size_t sep = text.find(": ");
  std::string payload = sep == std::string::npos ? text : text.substr(sep + 2);

  size_t begin = payload.find_first_not_of(" \t\r\n");
  size_t end = payload.find_last_not_of(" \t\r\n");
  std::string cleaned =
      begin == std::string::npos ? "" : payload.substr(begin, end - begin + 1);
  for (char& c : cleaned) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));

  std::string prefix = crypto::digest(crypto::DomainTag::Field, prompt).hex().substr(0, 16);
  return to_bytes("R:" + prefix + ":" + cleaned);
}

Result<enclave::ProviderReply> MockProvider::call(ByteView credential, ByteView prompt) {
  std::lock_guard lock(mutex_);
  if (fail_next_) {
    fail_next_ = false;
    return Result<enclave::ProviderReply>::failure("connection reset");
  }
  enclave::ProviderReply reply;
  reply.response = respond_to(prompt);
  reply.token_in = whitespace_tokens(prompt);
  reply.token_out = whitespace_tokens(ByteView(reply.response));

  Accounting& acc = accounting_[to_hex(credential)];
  ++acc.calls;
  acc.token_in += reply.token_in;
  acc.token_out += reply.token_out;
  return reply;
}

MockProvider::Accounting MockProvider::accounting_for(ByteView credential) const {
  std::lock_guard lock(mutex_);
  auto it = accounting_.find(to_hex(credential));
  return it == accounting_.end() ? Accounting{} : it->second;
}

}  // namespace memtrade::harness
