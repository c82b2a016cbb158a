#include "memtrade/crypto.hpp"

#include <openssl/evp.h>

#include <cstring>
#include <memory>
#include <stdexcept>

namespace memtrade::crypto {

std::optional<Digest> Digest::from_bytes(ByteView b) {
  if (b.size() != 32) return std::nullopt;
  Digest d;
  std::memcpy(d.v.data(), b.data(), 32);
  return d;
}

std::optional<Digest> Digest::from_hex_str(std::string_view hex) {
  auto raw = from_hex(hex);
  if (!raw) return std::nullopt;
  return from_bytes(*raw);
}

std::string_view tag_label(DomainTag tag) {
  switch (tag) {
    case DomainTag::Field: return "FIELD";
    case DomainTag::Interaction: return "INTERACTION";
    case DomainTag::Root: return "ROOT";
    case DomainTag::Receipt: return "RECEIPT";
    case DomainTag::Cert: return "CERT";
    case DomainTag::Anchor: return "ANCHOR";
    case DomainTag::Token: return "TOKEN";
    case DomainTag::Inherit: return "INHERIT";
    case DomainTag::Hello: return "HELLO";
    case DomainTag::Confirm: return "CONFIRM";
    case DomainTag::MemberList: return "MEMBERLIST";
    case DomainTag::Bulletin: return "BULLETIN";
    case DomainTag::Account: return "ACCOUNT";
    case DomainTag::Review: return "REVIEW";
  }
  return "UNKNOWN";
}

namespace {

struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};
using MdCtx = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;

struct PkeyDeleter {
  void operator()(EVP_PKEY* k) const { EVP_PKEY_free(k); }
};
using Pkey = std::unique_ptr<EVP_PKEY, PkeyDeleter>;

Digest sha256_parts(ByteView a, ByteView b, ByteView c) {
  MdCtx ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 init failed");
  }
  for (ByteView part : {a, b, c}) {
    if (!part.empty() && EVP_DigestUpdate(ctx.get(), part.data(), part.size()) != 1) {
      throw std::runtime_error("SHA-256 update failed");
    }
  }
  Digest out;
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), out.v.data(), &len) != 1 || len != 32) {
    throw std::runtime_error("SHA-256 final failed");
  }
  return out;
}

Bytes tag_prefix(DomainTag tag) {
  std::string_view label = tag_label(tag);
  Bytes prefix;
  prefix.push_back(static_cast<uint8_t>(label.size()));
  append_bytes(prefix, to_bytes(label));
  return prefix;
}

}  // namespace

Digest sha256(ByteView data) {
  return sha256_parts(data, {}, {});
}

Digest digest(DomainTag tag, ByteView payload) {
  Bytes prefix = tag_prefix(tag);
  return sha256_parts(prefix, payload, {});
}

Digest commit(DomainTag tag, const Salt& salt, ByteView payload) {
  Bytes prefix = tag_prefix(tag);
  return sha256_parts(prefix, ByteView(salt.data(), salt.size()), payload);
}

std::optional<PublicIdentity> PublicIdentity::from_bytes(ByteView b) {
  if (b.size() != 32) return std::nullopt;
  PublicIdentity p;
  std::memcpy(p.key.data(), b.data(), 32);
  return p;
}

std::optional<Signature> Signature::from_bytes(ByteView b) {
  if (b.size() != 64) return std::nullopt;
  Signature s;
  std::memcpy(s.sig.data(), b.data(), 64);
  return s;
}

KeyPair KeyPair::from_seed(const std::array<uint8_t, 32>& seed) {
  Pkey key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed.data(), seed.size()));
  if (!key) throw std::runtime_error("Ed25519 key derivation failed");
  KeyPair kp;
  kp.seed_ = seed;
  size_t publen = kp.public_.key.size();
  if (EVP_PKEY_get_raw_public_key(key.get(), kp.public_.key.data(), &publen) != 1 || publen != 32) {
    throw std::runtime_error("Ed25519 public key extraction failed");
  }
  return kp;
}

KeyPair KeyPair::generate() {
  Rng rng = Rng::system();
  return from_seed(rng.bytes32());
}

KeyPair KeyPair::from_rng(Rng& rng) {
  return from_seed(rng.bytes32());
}

Signature KeyPair::sign(DomainTag tag, ByteView payload) const {
  Digest msg = digest(tag, payload);
  Pkey key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed_.data(), seed_.size()));
  if (!key) throw std::runtime_error("Ed25519 key load failed");
  MdCtx ctx(EVP_MD_CTX_new());
  Signature out;
  size_t siglen = out.sig.size();
  if (!ctx ||
      EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1 ||
      EVP_DigestSign(ctx.get(), out.sig.data(), &siglen, msg.v.data(), msg.v.size()) != 1 ||
      siglen != 64) {
    throw std::runtime_error("Ed25519 signing failed");
  }
  return out;
}

bool verify(const PublicIdentity& pub, DomainTag tag, ByteView payload, const Signature& sig) {
  Pkey key(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, pub.key.data(), pub.key.size()));
  if (!key) return false;
  MdCtx ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1) {
    return false;
  }
  Digest msg = digest(tag, payload);
  return EVP_DigestVerify(ctx.get(), sig.sig.data(), sig.sig.size(), msg.v.data(), msg.v.size()) == 1;
}

}  // namespace memtrade::crypto
