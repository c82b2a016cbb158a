#pragma once

#include "memtrade/crypto.hpp"

namespace memtrade::simroot {

/// Well-known test keypair standing in for the hardware vendor root. The
/// seed ships in the repository (keys/vendor_root.seed.hex) together with
/// the public half (keys/vendor_root.public.hex); anyone can mint
/// attestations with it, which is the point of the simulation.
inline constexpr std::array<uint8_t, 32> kSimVendorSeed = {
    'm', 'e', 'm', 't', 'r', 'a', 'd', 'e', '-', 't', 'e', 's', 't', '-', 'v', 'e',
    'n', 'd', 'o', 'r', '-', 'r', 'o', 'o', 't', '-', 'v', '1', 0, 0, 0, 0};

crypto::KeyPair sim_vendor_root();

}  // namespace memtrade::simroot
