#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "memtrade/bytes.hpp"

namespace memtrade {

// Versioned container framing: 4-byte magic, 1-byte version, canonical payload.
using ContainerMagic = std::array<uint8_t, 4>;

inline constexpr ContainerMagic kArtifactMagic{'M', 'E', 'M', 'A'};   // artifact + disclosure proof
inline constexpr ContainerMagic kEncryptedMagic{'M', 'E', 'M', 'C'};  // encrypted delivery wrapper
inline constexpr ContainerMagic kJournalMagic{'M', 'E', 'M', 'J'};    // platform journal file
inline constexpr ContainerMagic kStateMagic{'M', 'E', 'M', 'S'};      // persisted enclave state
inline constexpr ContainerMagic kMemberListMagic{'M', 'E', 'M', 'L'}; // signed member-list document

inline constexpr uint8_t kContainerVersion = 1;

Bytes seal_container(const ContainerMagic& magic, uint8_t version, ByteView payload);

// Returns the payload view, or nullopt on wrong magic/version/truncation.
std::optional<ByteView> open_container(const ContainerMagic& magic, uint8_t version, ByteView bytes);

}  // namespace memtrade
