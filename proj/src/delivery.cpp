#include "memtrade/delivery.hpp"

#include <openssl/evp.h>

#include <memory>

#include "memtrade/canon.hpp"

namespace memtrade::delivery {

namespace {

struct CipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;

constexpr size_t kNonceLen = 12;
constexpr size_t kTagLen = 16;

}  // namespace

Key make_key(Rng& rng) {
  Key key{};
  rng.fill(key.data(), key.size());
  return key;
}

Bytes encrypt(const Key& key, ByteView plaintext, Rng& rng) {
  Bytes nonce = rng.bytes(kNonceLen);
  Bytes ciphertext(plaintext.size());
  std::array<uint8_t, kTagLen> tag{};

  CipherCtx ctx(EVP_CIPHER_CTX_new());
  int len = 0;
  if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, kNonceLen, nullptr) != 1 ||
      EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()) != 1) {
    throw std::runtime_error("AES-GCM init failed");
  }
  if (!plaintext.empty() &&
      EVP_EncryptUpdate(ctx.get(), ciphertext.data(), &len, plaintext.data(),
                        static_cast<int>(plaintext.size())) != 1) {
    throw std::runtime_error("AES-GCM encrypt failed");
  }
  int final_len = 0;
  if (EVP_EncryptFinal_ex(ctx.get(), ciphertext.data() + len, &final_len) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kTagLen, tag.data()) != 1) {
    throw std::runtime_error("AES-GCM finalize failed");
  }

  canon::Value payload = canon::Value::record({
      canon::Value::bytes(ByteView(nonce)),
      canon::Value::bytes(ByteView(ciphertext)),
      canon::Value::bytes(ByteView(tag.data(), tag.size())),
  });
  return seal_container(kEncryptedMagic, kContainerVersion, payload.encode());
}

Result<Bytes> decrypt(const Key& key, ByteView container) {
  auto payload = open_container(kEncryptedMagic, kContainerVersion, container);
  if (!payload) return Result<Bytes>::failure("not an encrypted delivery container");
  auto value = canon::Value::decode(*payload);
  if (!value || !value->is_record() || value->items().size() != 3 ||
      !value->items()[0].is_bytes() || !value->items()[1].is_bytes() ||
      !value->items()[2].is_bytes()) {
    return Result<Bytes>::failure("malformed delivery container");
  }
  const Bytes& nonce = value->items()[0].as_bytes();
  const Bytes& ciphertext = value->items()[1].as_bytes();
  Bytes tag = value->items()[2].as_bytes();
  if (nonce.size() != kNonceLen || tag.size() != kTagLen) {
    return Result<Bytes>::failure("malformed delivery container");
  }

  Bytes plaintext(ciphertext.size());
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  int len = 0;
  if (!ctx || EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, kNonceLen, nullptr) != 1 ||
      EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()) != 1) {
    return Result<Bytes>::failure("AES-GCM init failed");
  }
  if (!ciphertext.empty() &&
      EVP_DecryptUpdate(ctx.get(), plaintext.data(), &len, ciphertext.data(),
                        static_cast<int>(ciphertext.size())) != 1) {
    return Result<Bytes>::failure("decryption failed");
  }
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kTagLen, tag.data()) != 1) {
    return Result<Bytes>::failure("decryption failed");
  }
  int final_len = 0;
  if (EVP_DecryptFinal_ex(ctx.get(), plaintext.data() + len, &final_len) != 1) {
    return Result<Bytes>::failure("authentication failed: ciphertext tampered or wrong key");
  }
  return plaintext;
}

}  // namespace memtrade::delivery
