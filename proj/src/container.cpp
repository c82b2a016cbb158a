#include "memtrade/container.hpp"

#include <algorithm>

namespace memtrade {

Bytes seal_container(const ContainerMagic& magic, uint8_t version, ByteView payload) {
  Bytes out;
  out.reserve(5 + payload.size());
  out.insert(out.end(), magic.begin(), magic.end());
  out.push_back(version);
  append_bytes(out, payload);
  return out;
}

std::optional<ByteView> open_container(const ContainerMagic& magic, uint8_t version, ByteView bytes) {
  if (bytes.size() < 5) return std::nullopt;
  if (!std::equal(magic.begin(), magic.end(), bytes.begin())) return std::nullopt;
  if (bytes[4] != version) return std::nullopt;
  return bytes.subspan(5);
}

}  // namespace memtrade
