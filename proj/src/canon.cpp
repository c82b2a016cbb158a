#include "memtrade/canon.hpp"

namespace memtrade::canon {

Value Value::bytes(Bytes b) {
  Value v;
  v.kind_ = Kind::Bytes;
  v.bytes_ = std::move(b);
  return v;
}

Value Value::bytes(ByteView b) {
  return bytes(Bytes(b.begin(), b.end()));
}

Value Value::bytes(std::string_view s) {
  return bytes(to_bytes(s));
}

Value Value::u64(uint64_t v64) {
  Value v;
  v.kind_ = Kind::U64;
  v.u64_ = v64;
  return v;
}

Value Value::list(std::vector<Value> items) {
  Value v;
  v.kind_ = Kind::List;
  v.items_ = std::move(items);
  return v;
}

Value Value::record(std::vector<Value> fields) {
  Value v;
  v.kind_ = Kind::Record;
  v.items_ = std::move(fields);
  return v;
}

static void encode_into(const Value& v, Bytes& out) {
  out.push_back(static_cast<uint8_t>(v.kind()));
  switch (v.kind()) {
    case Value::Kind::Bytes:
      append_u64_be(out, v.as_bytes().size());
      append_bytes(out, v.as_bytes());
      break;
    case Value::Kind::U64:
      append_u64_be(out, v.as_u64());
      break;
    case Value::Kind::List:
    case Value::Kind::Record:
      append_u64_be(out, v.items().size());
      for (const Value& item : v.items()) encode_into(item, out);
      break;
  }
}

Bytes Value::encode() const {
  Bytes out;
  encode_into(*this, out);
  return out;
}

Bytes encode(const Value& v) {
  return v.encode();
}

namespace {

struct Cursor {
  ByteView in;
  size_t pos = 0;

  size_t remaining() const { return in.size() - pos; }

  std::optional<uint8_t> take_byte() {
    if (remaining() < 1) return std::nullopt;
    return in[pos++];
  }

  std::optional<uint64_t> take_u64() {
    if (remaining() < 8) return std::nullopt;
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | in[pos++];
    return v;
  }
};

std::optional<Value> decode_node(Cursor& cur, size_t depth) {
  if (depth > Value::kMaxDepth) return std::nullopt;
  auto tag = cur.take_byte();
  if (!tag) return std::nullopt;
  switch (static_cast<Value::Kind>(*tag)) {
    case Value::Kind::Bytes: {
      auto len = cur.take_u64();
      if (!len || *len > cur.remaining()) return std::nullopt;
      Bytes b(cur.in.begin() + static_cast<ptrdiff_t>(cur.pos),
              cur.in.begin() + static_cast<ptrdiff_t>(cur.pos + *len));
      cur.pos += *len;
      return Value::bytes(std::move(b));
    }
    case Value::Kind::U64: {
      auto v = cur.take_u64();
      if (!v) return std::nullopt;
      return Value::u64(*v);
    }
    case Value::Kind::List:
    case Value::Kind::Record: {
      auto count = cur.take_u64();
      // Every child occupies at least one byte; caps allocation on garbage input.
      if (!count || *count > cur.remaining()) return std::nullopt;
      std::vector<Value> items;
      items.reserve(static_cast<size_t>(*count));
      for (uint64_t i = 0; i < *count; ++i) {
        auto child = decode_node(cur, depth + 1);
        if (!child) return std::nullopt;
        items.push_back(std::move(*child));
      }
      if (static_cast<Value::Kind>(*tag) == Value::Kind::List) return Value::list(std::move(items));
      return Value::record(std::move(items));
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<Value> Value::decode(ByteView in) {
  Cursor cur{in};
  auto v = decode_node(cur, 0);
  if (!v || cur.pos != in.size()) return std::nullopt;
  return v;
}

bool Value::operator==(const Value& other) const {
  if (kind_ != other.kind_) return false;
  switch (kind_) {
    case Kind::Bytes:
      return bytes_ == other.bytes_;
    case Kind::U64:
      return u64_ == other.u64_;
    case Kind::List:
    case Kind::Record:
      return items_ == other.items_;
  }
  return false;
}

}  // namespace memtrade::canon
