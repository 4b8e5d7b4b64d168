#include "qpop/adversary.hpp"

#include <algorithm>

namespace qpop {

namespace {
const struct {
  Strategy s;
  const char* name;
} kStrategyNames[] = {
    {Strategy::SilentLeader, "SilentLeader"},
    {Strategy::EquivocatingLeader, "EquivocatingLeader"},
    {Strategy::VoteWithholder, "VoteWithholder"},
    {Strategy::RegistrationSpammer, "RegistrationSpammer"},
    {Strategy::PositionSpoofer, "PositionSpoofer"},
    {Strategy::DoubleRegistrant, "DoubleRegistrant"},
    {Strategy::BAsaboteur, "BAsaboteur"},
    {Strategy::DelayMaximizer, "DelayMaximizer"},
};
}  // namespace

const char* strategy_name(Strategy s) {
  for (const auto& e : kStrategyNames) {
    if (e.s == s) return e.name;
  }
  return "?";
}

std::optional<Strategy> strategy_from_name(const std::string& name) {
  for (const auto& e : kStrategyNames) {
    if (name == e.name) return e.s;
  }
  return std::nullopt;
}

bool AdversaryConfig::has(Strategy s) const {
  return std::find(strategies.begin(), strategies.end(), s) !=
         strategies.end();
}

SeatBehavior Adversary::pbft_behavior() const {
  SeatBehavior b;
  b.silent_leader = enabled(Strategy::SilentLeader);
  b.equivocate_leader = enabled(Strategy::EquivocatingLeader);
  b.withhold_votes = enabled(Strategy::VoteWithholder);
  return b;
}

Net::DelayPolicy Adversary::delay_policy(
    double delta, std::shared_ptr<Xoshiro256ss> net_rng) const {
  std::string kind = cfg_.delay_policy;
  if (enabled(Strategy::DelayMaximizer)) kind = "max";
  if (kind == "max") {
    return [delta](const Envelope&) { return delta; };
  }
  if (kind == "zero") {
    return [](const Envelope&) { return 0.0; };
  }
  return [delta, net_rng](const Envelope&) { return net_rng->unit() * delta; };
}

Bytes Adversary::fresh_pk(Keyring* keyring, const std::string& owner) {
  Enc e;
  e.str("adversary-key").u64(key_counter_++);
  KeyPair kp = keygen(sha256(e));
  if (keyring) keyring->bind(kp.pk, owner, kp.sk);
  return kp.pk;
}

std::vector<uint64_t> Adversary::spoof_cells(
    const Partition& part, const std::set<uint64_t>& honest_cells) const {
  std::vector<uint64_t> out;
  for (uint64_t c = part.cell_count; c-- > 0;) {
    if (!honest_cells.count(c)) out.push_back(c);
  }
  return out;
}

RegActions Adversary::registration_actions(
    RegMode mode, const GroupParams& gp, const Bytes& r,
    const ReconfigClock& clock, const Partition& part,
    const std::set<uint64_t>& honest_cells, DeviceRegistry* devices,
    Keyring* keyring, uint64_t round) {
  RegActions out;
  const bool spam = enabled(Strategy::RegistrationSpammer);
  const bool spoof = enabled(Strategy::PositionSpoofer);
  const bool dbl = enabled(Strategy::DoubleRegistrant);
  if (!spam && !spoof && !dbl) return out;

  std::vector<uint64_t> cells = spoof_cells(part, honest_cells);
  if (cells.empty()) cells.push_back(part.cell_count - 1);
  SolverBudget budget = SolverBudget::for_window(cfg_.r_a_rate,
                                                 clock.tau_register);

  // Attempting a solve past the budget is the capability breach; the engine
  // plans within budget, so only the deliberate test overrun can trip this.
  auto solve_at = [&](const Bytes& pk, uint64_t pos) {
    auto x = solve_dlog(gp, puzzle_target(pk, pos, r, gp), budget);
    if (!x) {
      model_violations_++;
      return;
    }
    out.valid_solved++;
    RegistrationIn m;
    m.pk = pk;
    m.pos = pos;
    m.has_solution = true;
    m.x = x->x;
    m.received_at = cfg_.r_a_rate > 0
                        ? double(out.valid_solved) / cfg_.r_a_rate
                        : 0.0;
    out.msgs.push_back(std::move(m));
  };

  if (spam) {
    // Invalid solutions cost nothing and are sent immediately.
    for (uint64_t k = 0; k < cfg_.spam_invalid_per_round; k++) {
      RegistrationIn m;
      m.pk = fresh_pk(keyring, "adversary");
      m.pos = cells[k % cells.size()];
      m.received_at = 0.1;
      if (mode == RegMode::SpamResistant) {
        m.has_solution = true;
        m.x = rng_.below(gp.q);
        if (verify_dlog(gp, puzzle_target(m.pk, m.pos, r, gp),
                        PuzzleSolution{m.x})) {
          m.x = (m.x + 1) % gp.q;
        }
      }
      out.invalid_spam++;
      out.msgs.push_back(std::move(m));
    }
  }

  if (mode == RegMode::Plain) {
    // No toll to pay: spoof as many positions as desired.
    uint64_t want = spam || spoof ? cfg_.spam_invalid_per_round : 0;
    for (uint64_t k = 0; k < want; k++) {
      RegistrationIn m;
      m.pk = fresh_pk(keyring, "adversary");
      m.pos = cells[k % cells.size()];
      m.received_at = 0.1;
      out.msgs.push_back(std::move(m));
    }
  } else if (spam || spoof) {
    uint64_t reserve = dbl ? std::min<uint64_t>(2, budget.remaining) : 0;
    uint64_t avail = budget.remaining - reserve;
    uint64_t want = spam ? avail : std::min<uint64_t>(avail, 5);
    for (uint64_t k = 0; k < want; k++) {
      solve_at(fresh_pk(keyring, "adversary"), cells[k % cells.size()]);
    }
  }

  if (dbl && devices) {
    // One real device, relocated every round; both the vacated and the new
    // cell get registered. Only the occupied cell can pass CVPV.
    uint64_t cell_a = cells[0];
    uint64_t cell_b = cells.size() > 1 ? cells[1] : cells[0];
    if (!dr_device_made_) {
      QuantumDevice d;
      d.id = 900000 + devices->devices.size();
      d.owner = "adversary-dr";
      d.cell = cell_a;
      devices->devices.push_back(d);
      dr_device_id_ = d.id;
      dr_device_made_ = true;
    }
    uint64_t from = 0, to = 0;
    for (auto& d : devices->devices) {
      if (d.id == dr_device_id_) {
        from = d.cell;
        to = (round % 2 == 0) ? cell_a : cell_b;
        d.cell = to;
        break;
      }
    }
    for (uint64_t pos : {from, to}) {
      Bytes pk = fresh_pk(keyring, "adversary-dr");
      if (mode == RegMode::Plain) {
        RegistrationIn m;
        m.pk = pk;
        m.pos = pos;
        m.received_at = 0.1;
        out.msgs.push_back(std::move(m));
      } else if (budget.remaining > 0) {
        solve_at(pk, pos);
      }
      if (from == to) break;
    }
  }

  // Deliberate overruns (tests only): once the window budget is spent,
  // every further attempt is blocked and counted.
  if (mode == RegMode::SpamResistant) {
    for (uint64_t k = 0; k < extra_attempts_; k++) {
      solve_at(fresh_pk(keyring, "adversary"), cells[k % cells.size()]);
    }
  }

  std::stable_sort(out.msgs.begin(), out.msgs.end(),
                   [](const RegistrationIn& a, const RegistrationIn& b) {
                     return a.received_at < b.received_at;
                   });
  return out;
}

BaByzFn Adversary::ba_byz() {
  if (!enabled(Strategy::BAsaboteur)) return {};
  Xoshiro256ss* rng = &rng_;
  return [rng](int, uint64_t, int, int) -> int {
    uint64_t d = rng->below(4);
    return d == 3 ? -1 : int(d);
  };
}

std::function<int(int, int)> Adversary::publish_fn() {
  if (!enabled(Strategy::BAsaboteur)) return {};
  Xoshiro256ss* rng = &rng_;
  return [rng](int, int) -> int {
    uint64_t d = rng->below(3);
    return d == 2 ? -1 : int(d);
  };
}

}  // namespace qpop
