#pragma once

#include <map>
#include <mutex>
#include <string>

#include "memtrade/enclave.hpp"

namespace memtrade::harness {

/// Deterministic stand-in for an external model API. Same prompt, same
/// response and token counts, always. Keeps independent per-credential
/// accounting of calls and tokens.
class MockProvider : public enclave::ModelProvider {
 public:
  MockProvider(crypto::KeyPair key, std::string model_name);

  enclave::ProviderPublic public_config(const std::string& endpoint = "mock://provider") const;

  enclave::ProviderHello hello(const std::array<uint8_t, 16>& nonce) override;
  Result<enclave::ProviderReply> call(ByteView credential, ByteView prompt) override;

  struct Accounting {
    uint64_t calls = 0;
    uint64_t token_in = 0;
    uint64_t token_out = 0;
  };
  Accounting accounting_for(ByteView credential) const;

  /// Next call fails before producing a response (transport fault injection).
  void fail_next_call() { fail_next_ = true; }

  static uint64_t whitespace_tokens(ByteView text);
  /// "R:" + first 16 hex chars of digest(FIELD, prompt) + ":" + cleaned
  /// payload (uppercase, trimmed; payload = text after the first ": ").
  static Bytes respond_to(ByteView prompt);

 private:
  crypto::KeyPair key_;
  std::string model_name_;
  bool fail_next_ = false;
  mutable std::mutex mutex_;
  std::map<std::string, Accounting> accounting_;  // keyed by credential hex
};

}  // namespace memtrade::harness
