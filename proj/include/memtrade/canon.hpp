#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "memtrade/bytes.hpp"

namespace memtrade::canon {

/// Canonical value tree: byte-strings, unsigned 64-bit integers, ordered
/// lists, and fixed-field records. The encoding is deterministic and
/// injective: every node starts with a kind tag, byte-strings and
/// containers carry a big-endian 64-bit length/count prefix.
class Value {
 public:
  enum class Kind : uint8_t {
    Bytes = 0x01,
    U64 = 0x02,
    List = 0x03,
    Record = 0x04,
  };

  static Value bytes(Bytes b);
  static Value bytes(ByteView b);
  static Value bytes(std::string_view s);
  static Value u64(uint64_t v);
  static Value list(std::vector<Value> items);
  static Value record(std::vector<Value> fields);

  Kind kind() const { return kind_; }
  bool is_bytes() const { return kind_ == Kind::Bytes; }
  bool is_u64() const { return kind_ == Kind::U64; }
  bool is_list() const { return kind_ == Kind::List; }
  bool is_record() const { return kind_ == Kind::Record; }

  const Bytes& as_bytes() const { return bytes_; }
  uint64_t as_u64() const { return u64_; }
  const std::vector<Value>& items() const { return items_; }

  Bytes encode() const;

  // Strict inverse of encode(): rejects trailing bytes, truncated input,
  // oversized length prefixes, and nesting deeper than kMaxDepth.
  static std::optional<Value> decode(ByteView in);

  bool operator==(const Value& other) const;

  static constexpr size_t kMaxDepth = 64;

 private:
  Value() = default;
  Kind kind_ = Kind::Bytes;
  Bytes bytes_;
  uint64_t u64_ = 0;
  std::vector<Value> items_;
};

Bytes encode(const Value& v);

}  // namespace memtrade::canon
