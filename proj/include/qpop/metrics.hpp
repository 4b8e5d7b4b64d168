#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qpop/event_log.hpp"

namespace qpop {

struct CommitteeRow {
  uint64_t epoch = 0;
  uint64_t f_t = 0;
  std::string admitted;  // pk hex, empty if none
  std::string evicted;
};

struct MetricsReport {
  std::vector<uint64_t> f_t;  // genesis first, then after each epoch
  bool safety_violation = false;
  double safety_violation_t = -1;  // first time, -1 if never
  uint64_t commits = 0;
  double mean_commit_latency = 0;
  double max_commit_latency = 0;
  uint64_t view_changes = 0;
  uint64_t spam_submitted = 0;
  uint64_t spam_rejected = 0;
  uint64_t spam_forwarded = 0;
  uint64_t cvpv_instances = 0;
  uint64_t cvpv_accepts = 0;
  uint64_t cvpv_attack_accepts = 0;
  std::map<std::string, uint64_t> elections;  // participant id -> admissions
  uint64_t epochs = 0;
  uint64_t committed_txs = 0;
  uint64_t pending_txs = 0;
  uint64_t model_violations = 0;
  std::vector<std::string> warnings;
  std::vector<CommitteeRow> committee;

  Json to_json() const;
  static std::optional<MetricsReport> from_json(const Json& j);
  std::string committee_csv() const;
};

}  // namespace qpop
