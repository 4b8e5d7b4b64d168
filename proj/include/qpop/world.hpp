#pragma once

#include <string>
#include <vector>

#include "qpop/metrics.hpp"
#include "qpop/scenario.hpp"

namespace qpop {

struct WorldResult {
  MetricsReport metrics;
  std::string events_jsonl;
  std::string committee_csv;
  // Inputs for the reduced sampling chain, for cross-mode comparison.
  std::vector<uint8_t> genesis_byz;
  std::vector<uint8_t> cell_byz;  // ascending cell order, one flag per cell
};

// One deterministic end-to-end run: every tick injects T' slots of
// transactions for the ordering protocol, and every tau_reconfig-th tick
// additionally runs a registration round plus one reconfiguration epoch.
WorldResult run_world(const ScenarioConfig& cfg, bool with_log = true);

}  // namespace qpop
