#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qpop/pbft.hpp"
#include "qpop/reconfig.hpp"
#include "qpop/simnet.hpp"

namespace qpop {

enum class Strategy {
  SilentLeader,
  EquivocatingLeader,
  VoteWithholder,
  RegistrationSpammer,
  PositionSpoofer,
  DoubleRegistrant,
  BAsaboteur,
  DelayMaximizer,
};

const char* strategy_name(Strategy s);
std::optional<Strategy> strategy_from_name(const std::string& name);

struct AdversaryConfig {
  double rho = 0;
  std::vector<Strategy> strategies;
  double r_a_rate = 0;      // R_A, puzzle solves per unit time
  double break_prob = -1;   // CVPV soundness override; negative keeps 2^-lambda
  std::string delay_policy = "uniform";  // uniform | max | zero
  uint64_t f_genesis = 0;   // Byzantine seats in the genesis committee
  uint64_t spam_invalid_per_round = 16;

  bool has(Strategy s) const;
};

struct RegActions {
  std::vector<RegistrationIn> msgs;  // ordered by received_at
  uint64_t valid_solved = 0;
  uint64_t invalid_spam = 0;
};

// Deterministic strategy engine: every adversarial choice is a function of
// the config and one PRNG stream. Budget and delay limits are enforced at
// the acting site; an attempt past a limit is counted as a model violation.
class Adversary {
 public:
  Adversary(AdversaryConfig cfg, Xoshiro256ss rng)
      : cfg_(std::move(cfg)), rng_(rng) {}

  const AdversaryConfig& config() const { return cfg_; }
  bool enabled(Strategy s) const { return cfg_.has(s); }

  SeatBehavior pbft_behavior() const;

  // Delay policy for all committee links ("max" when DelayMaximizer is on).
  Net::DelayPolicy delay_policy(double delta,
                                std::shared_ptr<Xoshiro256ss> net_rng) const;

  // Registration-round actions. honest_cells are cells backed by honest
  // devices (the adversary spoofs elsewhere); devices/keyring are mutated
  // for the DoubleRegistrant relocation.
  RegActions registration_actions(RegMode mode, const GroupParams& gp,
                                  const Bytes& r, const ReconfigClock& clock,
                                  const Partition& part,
                                  const std::set<uint64_t>& honest_cells,
                                  DeviceRegistry* devices, Keyring* keyring,
                                  uint64_t round);

  BaByzFn ba_byz();
  std::function<int(int, int)> publish_fn();

  uint64_t model_violations() const { return model_violations_; }
  // Test knob: solve attempts past the R_A budget (each is blocked + logged).
  void set_extra_solve_attempts(uint64_t k) { extra_attempts_ = k; }

 private:
  Bytes fresh_pk(Keyring* keyring, const std::string& owner);
  std::vector<uint64_t> spoof_cells(const Partition& part,
                                    const std::set<uint64_t>& honest_cells) const;

  AdversaryConfig cfg_;
  Xoshiro256ss rng_;
  uint64_t key_counter_ = 0;
  uint64_t extra_attempts_ = 0;
  uint64_t model_violations_ = 0;
  uint64_t dr_device_id_ = 0;
  bool dr_device_made_ = false;
};

}  // namespace qpop
