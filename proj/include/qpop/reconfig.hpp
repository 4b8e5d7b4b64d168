#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qpop/ba.hpp"
#include "qpop/beacon.hpp"
#include "qpop/cvpv.hpp"
#include "qpop/dlog.hpp"
#include "qpop/event_log.hpp"
#include "qpop/pbft.hpp"

namespace qpop {

struct Seat {
  Bytes pk;
  uint64_t cell = 0;
  bool byzantine = false;
};

// Ordered oldest-first; rotation admits at the back and evicts the front.
struct Committee {
  std::vector<Seat> seats;
  uint64_t index = 1;

  uint64_t n() const { return seats.size(); }
  uint64_t f_bound() const { return pbft_f(seats.size()); }
  uint64_t byz_count() const;
  std::vector<Bytes> pks() const;
  std::vector<bool> byz_mask() const;
  void rotate(Seat incoming);
};

inline uint64_t publish_quorum(uint64_t n) { return (2 * n + 2) / 3; }

// Per-round registry: cell index -> lexicographically sorted pks.
using EligibleDict = std::map<uint64_t, std::vector<Bytes>>;

enum class RegMode { Plain, SpamResistant };

struct RegistrationIn {
  Bytes pk;
  uint64_t pos = 0;
  bool has_solution = false;
  uint64_t x = 0;
  double received_at = 0;  // relative to the round start
};

struct RegistrationTally {
  uint64_t submitted = 0;
  uint64_t accepted = 0;
  uint64_t dropped_invalid = 0;
  uint64_t dropped_late = 0;
  uint64_t dropped_dup = 0;
};

struct ReconfigClock {
  uint64_t tau_reconfig = 5;
  double tau_register = 1;
  double tau_v = 0.5;
  double delta = 1;
};

// Rebuilds the registry from this round's inbox. Messages arriving after
// tau_register + delta are late; in spam-resistant mode a verifying puzzle
// solution for (pk, pos, r) is required.
EligibleDict registration_round(RegMode mode,
                                const std::vector<RegistrationIn>& inbox,
                                const GroupParams& gp, const Bytes& r,
                                const ReconfigClock& clock,
                                RegistrationTally* tally = nullptr);

struct CandidateRecord {
  std::string pk_hex;
  uint64_t cell = 0;
  bool success = false;
  uint64_t published_ones = 0;
  std::vector<int> r_bits;  // per-verifier CVPV outcome
  std::vector<int> v_bits;  // per-seat published value (-1 = silent)
};

struct CvpvStats {
  uint64_t instances = 0;
  uint64_t accepts = 0;
  uint64_t attack_accepts = 0;
};

struct VerifyEnv {
  const DeviceRegistry* devices = nullptr;
  const Keyring* keyring = nullptr;
  CvpvConfig cvpv;
  NetworkConfig net;
  Partition part;
  ReconfigClock clock;
  BaByzFn ba_byz;                              // Byzantine BA behavior
  std::function<int(int, int)> publish_fn;     // (byz seat, v_j) -> bit or -1
  EventLog* log = nullptr;
  Xoshiro256ss* rng = nullptr;
  double* now = nullptr;  // advanced across verifier windows and BA rounds
  CvpvStats* stats = nullptr;
};

// One candidate position: every committee member verifies each claimed pk
// in its own CVPV window, the committee agrees on each verdict, and members
// publish the agreed bit; >= ceil(2n/3) ones admit the pk.
std::optional<Bytes> verify_candidate(const Committee& com, uint64_t cpos,
                                      const std::vector<Bytes>& cpks,
                                      VerifyEnv& env,
                                      std::vector<CandidateRecord>* records);

struct EpochReport {
  uint64_t epoch = 0;
  std::vector<uint64_t> sampled_cells;
  std::vector<CandidateRecord> candidates;
  bool success = false;
  bool exhausted = false;
  std::string evicted;
  std::string admitted;
  uint64_t admitted_cell = 0;

  Json to_json() const;
};

// Beacon-driven sampling loop over the registry; rotates the committee on
// the first successful candidate.
EpochReport reconfiguration_epoch(Committee& com, EligibleDict dict,
                                  const Digest& r_epoch,
                                  const std::function<bool(const Bytes&)>& is_byz_pk,
                                  VerifyEnv& env);

}  // namespace qpop
