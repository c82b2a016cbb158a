#include "memtrade/simroot.hpp"

namespace memtrade::simroot {

crypto::KeyPair sim_vendor_root() {
  return crypto::KeyPair::from_seed(kSimVendorSeed);
}

}  // namespace memtrade::simroot
