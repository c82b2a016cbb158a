#pragma once

// Self-contained SHA-256 used as an independent oracle for digest tests.
// Deliberately not backed by the library's crypto path.

#include <array>
#include <cstdint>
#include <vector>

namespace testsupport {

std::array<uint8_t, 32> sha256_ref(const std::vector<uint8_t>& data);

}  // namespace testsupport
