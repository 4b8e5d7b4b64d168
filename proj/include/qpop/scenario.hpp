#pragma once

#include <string>
#include <vector>

#include "qpop/adversary.hpp"
#include "qpop/event_log.hpp"
#include "qpop/group.hpp"

namespace qpop {

struct ParticipantCfg {
  std::string id;
  std::vector<uint64_t> devices;  // one device per listed cell
  bool byzantine = false;
};

// One JSON document drives a whole run. Unknown fields anywhere in the
// document are rejected; numeric knobs have defaults.
struct ScenarioConfig {
  uint64_t n = 4;
  double epsilon = 0.05;
  double rho = 0;
  double lambda = 10;
  double gamma = 1;
  double delta = 1;
  uint64_t tau_reconfig = 5;
  double tau_register = 1;
  double tau_v = 0.5;
  uint64_t T = 10;
  uint64_t T_prime = 3;
  uint64_t dlog_bits = 6;
  double R_H = 2;
  double R_A = 4;
  uint64_t seed = 0;
  std::vector<ParticipantCfg> participants;
  AdversaryConfig adversary;
  std::string mode = "full";  // full | committee_mc

  std::string registration_mode = "spam_resistant";  // or "plain"
  double c_signal = 1;
  double line_length = 16;
  double verifier_offset = 0.25;
  double poq_time = 0.01;
  double epsilon_slack = 0;
  double honest_fail_prob = 0;
  uint64_t batch_size = 4;
  uint64_t trials = 1000;  // committee_mc mode only

  std::vector<std::string> warnings;

  GroupParams group() const;
};

// Smallest safe-prime group with p in [2^(bits-1), 2^bits); g = 4.
GroupParams find_group(uint64_t bits);

ScenarioConfig parse_scenario(const Json& doc);
ScenarioConfig load_scenario_file(const std::string& path);

}  // namespace qpop
