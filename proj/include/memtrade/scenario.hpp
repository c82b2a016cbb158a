#pragma once

#include <string>
#include <vector>

#include "memtrade/market.hpp"
#include "memtrade/provider.hpp"

namespace memtrade::harness {

struct ScenarioStep {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ScenarioReport {
  std::string name;
  std::vector<ScenarioStep> steps;
  std::string seller_final_root;     // hex of the seller's anchored root
  std::string successor_final_root;  // hex; exploration scenario only

  bool ok() const;
  std::string to_string() const;
  std::string to_json_string() const;
};

struct CleaningOptions {
  bool corrupt_delivery = false;  // flip a delivered byte; expect receipt refusal + refund
  bool second_buyer = false;      // co-fund via a second listing of the same artifact
  std::string journal_path;       // platform persistence, empty = in-memory
};

/// Crowdfunded data-cleaning flow over the bundled 20-row table with full
/// prompt disclosure: clean through the certified proxy, list, lock,
/// deliver, verify, settle, review.
ScenarioReport scenario_cleaning(uint64_t seed, const CleaningOptions& options = {});

/// Open-ended exploration flow: 50 certified calls, a non-contiguous
/// 10-interaction artifact with responses hidden, settlement, a hiding
/// scan, a resale-confirmation refusal, and one inheritance step with
/// lineage verification.
ScenarioReport scenario_exploration(uint64_t seed);

/// Bundled toy table (3 columns, deliberately messy whitespace and case).
const std::vector<std::string>& toy_dataset();

/// Certified listing metadata computed from a live log.
market::CertifiedMetadata make_metadata(const ledger::Log& log, Bytes advertisement);

}  // namespace memtrade::harness
