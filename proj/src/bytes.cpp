#include "memtrade/bytes.hpp"

#include <algorithm>

namespace memtrade {

Bytes to_bytes(std::string_view s) {
  return Bytes(s.begin(), s.end());
}

std::string to_string(ByteView b) {
  return std::string(reinterpret_cast<const char*>(b.data()), b.size());
}

std::string to_hex(ByteView b) {
  static const char* kHex = "0123456789abcdef";
  std::string out;
  out.resize(b.size() * 2);
  for (size_t i = 0; i < b.size(); ++i) {
    out[i * 2] = kHex[(b[i] >> 4) & 0xF];
    out[i * 2 + 1] = kHex[b[i] & 0xF];
  }
  return out;
}

static int hex_nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::optional<Bytes> from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) return std::nullopt;
  Bytes out;
  out.reserve(hex.size() / 2);
  for (size_t i = 0; i < hex.size(); i += 2) {
    int hi = hex_nibble(hex[i]);
    int lo = hex_nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out.push_back(static_cast<uint8_t>((hi << 4) | lo));
  }
  return out;
}

static const char kB64Alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string to_base64(ByteView b) {
  std::string out;
  out.reserve(((b.size() + 2) / 3) * 4);
  size_t i = 0;
  while (i + 3 <= b.size()) {
    uint32_t v = (b[i] << 16) | (b[i + 1] << 8) | b[i + 2];
    out.push_back(kB64Alphabet[(v >> 18) & 0x3F]);
    out.push_back(kB64Alphabet[(v >> 12) & 0x3F]);
    out.push_back(kB64Alphabet[(v >> 6) & 0x3F]);
    out.push_back(kB64Alphabet[v & 0x3F]);
    i += 3;
  }
  size_t rest = b.size() - i;
  if (rest == 1) {
    uint32_t v = b[i] << 16;
    out.push_back(kB64Alphabet[(v >> 18) & 0x3F]);
    out.push_back(kB64Alphabet[(v >> 12) & 0x3F]);
    out.push_back('=');
    out.push_back('=');
  } else if (rest == 2) {
    uint32_t v = (b[i] << 16) | (b[i + 1] << 8);
    out.push_back(kB64Alphabet[(v >> 18) & 0x3F]);
    out.push_back(kB64Alphabet[(v >> 12) & 0x3F]);
    out.push_back(kB64Alphabet[(v >> 6) & 0x3F]);
    out.push_back('=');
  }
  return out;
}

static int b64_value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

std::optional<Bytes> from_base64(std::string_view s) {
  if (s.size() % 4 != 0) return std::nullopt;
  Bytes out;
  out.reserve((s.size() / 4) * 3);
  for (size_t i = 0; i < s.size(); i += 4) {
    int pad = 0;
    int vals[4];
    for (int j = 0; j < 4; ++j) {
      char c = s[i + j];
      if (c == '=') {
        // Padding only in the last two positions of the final group.
        if (i + 4 != s.size() || j < 2) return std::nullopt;
        vals[j] = 0;
        ++pad;
      } else {
        if (pad > 0) return std::nullopt;
        vals[j] = b64_value(c);
        if (vals[j] < 0) return std::nullopt;
      }
    }
    uint32_t v = (vals[0] << 18) | (vals[1] << 12) | (vals[2] << 6) | vals[3];
    out.push_back(static_cast<uint8_t>((v >> 16) & 0xFF));
    if (pad < 2) out.push_back(static_cast<uint8_t>((v >> 8) & 0xFF));
    if (pad < 1) out.push_back(static_cast<uint8_t>(v & 0xFF));
  }
  return out;
}

void append_bytes(Bytes& out, ByteView more) {
  out.insert(out.end(), more.begin(), more.end());
}

void append_u64_be(Bytes& out, uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    out.push_back(static_cast<uint8_t>((v >> shift) & 0xFF));
  }
}

bool contains(ByteView haystack, ByteView needle) {
  if (needle.empty() || needle.size() > haystack.size()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

Bytes replace_all(ByteView data, ByteView needle, ByteView replacement) {
  if (needle.empty()) return Bytes(data.begin(), data.end());
  Bytes out;
  out.reserve(data.size());
  size_t i = 0;
  while (i < data.size()) {
    if (i + needle.size() <= data.size() &&
        std::equal(needle.begin(), needle.end(), data.begin() + static_cast<ptrdiff_t>(i))) {
      append_bytes(out, replacement);
      i += needle.size();
    } else {
      out.push_back(data[i]);
      ++i;
    }
  }
  return out;
}

}  // namespace memtrade
