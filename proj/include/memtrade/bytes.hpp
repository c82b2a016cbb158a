#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace memtrade {

using Bytes = std::vector<uint8_t>;
using ByteView = std::span<const uint8_t>;

Bytes to_bytes(std::string_view s);
std::string to_string(ByteView b);

std::string to_hex(ByteView b);
std::optional<Bytes> from_hex(std::string_view hex);

std::string to_base64(ByteView b);
std::optional<Bytes> from_base64(std::string_view s);

void append_bytes(Bytes& out, ByteView more);
void append_u64_be(Bytes& out, uint64_t v);

bool contains(ByteView haystack, ByteView needle);

// Replaces every non-overlapping occurrence of needle, scanning left to right.
Bytes replace_all(ByteView data, ByteView needle, ByteView replacement);

}  // namespace memtrade
