#include "qpop/world.hpp"

#include <map>
#include <memory>
#include <set>
#include <unordered_map>

#include "qpop/adversary.hpp"
#include "qpop/beacon.hpp"
#include "qpop/dlog.hpp"
#include "qpop/reconfig.hpp"
#include "qpop/simnet.hpp"
#include "qpop/wire.hpp"

namespace qpop {

namespace {

struct SlotTracker {
  bool have_h = false;
  Digest h{};
  uint64_t honest_commits = 0;
  bool have_batch = false;
  Batch batch;
  bool latency_done = false;
};

}  // namespace

WorldResult run_world(const ScenarioConfig& cfg, bool with_log) {
  WorldResult res;
  MetricsReport& mr = res.metrics;
  mr.warnings = cfg.warnings;

  EventLog log;
  EventLog* logp = with_log ? &log : nullptr;
  Scheduler sched;
  NetworkConfig netcfg;
  netcfg.delta = cfg.delta;
  netcfg.c_signal = cfg.c_signal;
  netcfg.line_length = cfg.line_length;
  Net net(sched, netcfg, logp);
  Gossip gossip(sched, netcfg, logp);
  Partition part = Partition::make(cfg.gamma, cfg.line_length);
  GroupParams gp = cfg.group();
  BeaconState beacon = BeaconState::from_u64(cfg.seed);
  RegMode reg_mode = cfg.registration_mode == "plain" ? RegMode::Plain
                                                      : RegMode::SpamResistant;
  ReconfigClock clock{cfg.tau_reconfig, cfg.tau_register, cfg.tau_v, cfg.delta};

  Adversary adv(cfg.adversary, rng_substream(cfg.seed, "adversary"));
  auto net_rng =
      std::make_shared<Xoshiro256ss>(rng_substream(cfg.seed, "net-delay"));
  net.set_delay_policy(adv.delay_policy(cfg.delta, net_rng));
  Xoshiro256ss cvpv_rng = rng_substream(cfg.seed, "cvpv");

  DeviceRegistry devices;
  Keyring keyring;
  std::set<uint64_t> honest_cells;
  std::map<std::string, bool> participant_byz;
  uint64_t dev_id = 1;
  for (const auto& p : cfg.participants) {
    participant_byz[p.id] = p.byzantine;
    for (uint64_t cell : p.devices) {
      QuantumDevice d;
      d.id = dev_id++;
      d.owner = p.id;
      d.cell = cell;
      d.poq_time = cfg.poq_time;
      devices.devices.push_back(d);
      if (!p.byzantine) honest_cells.insert(cell);
    }
  }
  {
    std::map<uint64_t, uint8_t> cells;
    for (const auto& p : cfg.participants)
      for (uint64_t cell : p.devices) cells.emplace(cell, p.byzantine ? 1 : 0);
    for (const auto& [c, b] : cells) res.cell_byz.push_back(b);
  }

  // Genesis committee; the first f_genesis seats are corrupted so the very
  // first leaders exercise the fault path.
  Committee com;
  com.index = 1;
  for (uint64_t i = 0; i < cfg.n; i++) {
    Enc e;
    e.str("genesis-key").u64(cfg.seed).u64(i);
    KeyPair kp = keygen(sha256(e));
    Seat s;
    s.pk = kp.pk;
    s.byzantine = i < cfg.adversary.f_genesis;
    com.seats.push_back(s);
    keyring.bind(kp.pk, "genesis-" + std::to_string(i), kp.sk);
    res.genesis_byz.push_back(s.byzantine ? 1 : 0);
  }
  mr.f_t.push_back(com.byz_count());

  std::unordered_map<std::string, bool> sig_cache;
  auto cached_verify = [&sig_cache](const Bytes& pk, const Bytes& msg,
                                    const Bytes& sig) {
    Enc e;
    e.bytes(pk).bytes(msg).bytes(sig);
    Digest d = sha256(e);
    std::string key(reinterpret_cast<const char*>(d.data()), d.size());
    auto it = sig_cache.find(key);
    if (it != sig_cache.end()) return it->second;
    bool ok = verify(pk, msg, sig);
    sig_cache.emplace(std::move(key), ok);
    return ok;
  };

  // Workload. Inputs are the tx ids, so batch validity tracks them directly.
  uint64_t tx_counter = 0;
  std::map<uint64_t, double> submit_time;
  std::set<uint64_t> pending;
  std::set<uint64_t> spent_global;
  double latency_sum = 0;
  uint64_t latency_n = 0;

  std::vector<std::unique_ptr<PbftNode>> nodes;
  std::vector<uint8_t> node_byz;  // byz mask of the live node set
  uint64_t epoch_token = 0;       // com.index of the live node set
  uint64_t slots_budget = 0;
  std::map<std::pair<uint64_t, uint64_t>, SlotTracker> trackers;

  uint64_t honest_seats = 0;

  auto pick_batch = [&]() {
    Batch b;
    for (uint64_t id : pending) {
      if (b.size() == cfg.batch_size) break;
      if (spent_global.count(id)) continue;
      b.push_back(Tx{id, id});
    }
    return b;
  };

  auto on_commit = [&](PbftNode& node, uint64_t slot, const CommitRecord& rec) {
    if (rec.have_batch)
      for (const Tx& tx : rec.batch) spent_global.insert(tx.input);
    uint64_t seat = uint64_t(node.seat());
    if (node_byz[seat]) return;
    SlotTracker& tr = trackers[{node.committee_index(), slot}];
    if (!tr.have_h) {
      tr.have_h = true;
      tr.h = rec.h;
    } else if (tr.h != rec.h && !mr.safety_violation) {
      mr.safety_violation = true;
      mr.safety_violation_t = sched.now();
      if (logp)
        logp->emit(sched.now(), "safety-violation", std::to_string(seat), "*",
                   rec.h, Json{{"slot", slot}});
    }
    tr.honest_commits++;
    if (rec.have_batch && !tr.have_batch) {
      tr.have_batch = true;
      tr.batch = rec.batch;
    }
    if (!tr.latency_done && tr.have_batch && tr.honest_commits >= honest_seats) {
      tr.latency_done = true;
      for (const Tx& tx : tr.batch) {
        auto it = submit_time.find(tx.id);
        if (it == submit_time.end()) continue;
        double lat = sched.now() - it->second;
        latency_sum += lat;
        latency_n++;
        if (lat > mr.max_commit_latency) mr.max_commit_latency = lat;
        pending.erase(tx.id);
      }
    }
  };

  std::function<void(int, int, const Msg&, uint64_t)> send_msg =
      [&](int from, int to, const Msg& m, uint64_t token) {
        if (to == from) {
          sched.schedule(sched.now(), [&, from, to, m, token] {
            if (token == epoch_token) nodes[size_t(to)]->on_message(from, m);
          });
          return;
        }
        Envelope env;
        env.sender = from;
        env.recipient = to;
        env.kind = msg_kind_name(m.kind);
        env.payload_digest = msg_digest(m);
        net.send(env, [&, from, to, m, token] {
          if (token == epoch_token) nodes[size_t(to)]->on_message(from, m);
        });
      };

  auto accumulate_node_counters = [&]() {
    for (uint64_t i = 0; i < cfg.n; i++) {
      if (!nodes[i] || node_byz[i]) continue;
      mr.view_changes += nodes[i]->view_changes_sent();
      if (nodes[i]->safety_conflicts() > 0 && !mr.safety_violation) {
        mr.safety_violation = true;
        mr.safety_violation_t = sched.now();
      }
    }
  };

  auto build_nodes = [&]() {
    nodes.clear();
    nodes.resize(cfg.n);
    node_byz.clear();
    honest_seats = 0;
    for (const auto& s : com.seats) {
      node_byz.push_back(s.byzantine ? 1 : 0);
      honest_seats += s.byzantine ? 0 : 1;
    }
    epoch_token = com.index;
    slots_budget = 0;
    std::vector<Bytes> cpks = com.pks();
    SeatBehavior byz = adv.pbft_behavior();
    for (uint64_t i = 0; i < cfg.n; i++) {
      int seat = int(i);
      uint64_t token = com.index;
      PbftNode::Hooks h;
      h.send = [&send_msg, seat, token](int to, const Msg& m) {
        send_msg(seat, to, m, token);
      };
      h.broadcast = [&send_msg, seat, token, n = cfg.n](const Msg& m) {
        for (uint64_t j = 0; j < n; j++) send_msg(seat, int(j), m, token);
      };
      h.now = [&sched]() { return sched.now(); };
      h.defer = [&, token](SimTime delay, std::function<void()> fn) {
        sched.schedule(sched.now() + delay, [&, token, fn = std::move(fn)] {
          if (token == epoch_token) fn();
        });
      };
      if (logp) {
        h.log = [logp, &sched, seat](std::string_view kind,
                                     const Digest& payload, Json detail) {
          std::string to = "*";
          if (detail.contains("to")) {
            if (detail["to"].is_string())
              to = detail["to"].get<std::string>();
            else
              to = std::to_string(detail["to"].get<int64_t>());
            detail.erase("to");
          }
          logp->emit(sched.now(), kind, std::to_string(seat), to, payload,
                     std::move(detail));
        };
      }
      h.verify = cached_verify;
      h.pick_batch = pick_batch;
      h.on_commit = on_commit;

      const Bytes& pk = com.seats[i].pk;
      const Keyring::Entry* entry = keyring.find(pk);
      Bytes sk = entry ? entry->sk : Bytes{};
      nodes[i] = std::make_unique<PbftNode>(seat, pk, sk, cpks, com.index,
                                            cfg.delta, std::move(h));
      if (com.seats[i].byzantine) nodes[i]->set_behavior(byz);
      nodes[i]->set_max_slot(0);
      nodes[i]->seed_spent(spent_global);
    }
  };
  build_nodes();

  auto all_honest_idle = [&]() {
    for (uint64_t i = 0; i < cfg.n; i++)
      if (!node_byz[i] && !nodes[i]->idle()) return false;
    return true;
  };

  auto drain = [&](double cap) {
    while (!sched.empty() && !all_honest_idle()) {
      double nt = sched.next_time();
      if (nt > cap) break;
      sched.run_until(nt);
    }
  };

  uint64_t f = com.f_bound();
  const double slot_cap = (14.0 * double(f + 1) + 10.0) * cfg.delta;

  auto steady_tick = [&](uint64_t tick) {
    double t0 = sched.now();
    Json ids = Json::array();
    for (uint64_t i = 0; i < cfg.T_prime * cfg.batch_size; i++) {
      uint64_t id = ++tx_counter;
      submit_time[id] = t0;
      pending.insert(id);
      ids.push_back(id);
    }
    slots_budget += cfg.T_prime;
    for (auto& nd : nodes) nd->set_max_slot(slots_budget);
    if (logp)
      logp->emit(t0, "workload", "world", "*", sha256(to_bytes(ids.dump())),
                 Json{{"tick", tick}, {"txs", ids}});
    for (auto& nd : nodes) nd->kick();
    drain(t0 + double(cfg.T_prime) * slot_cap + 20.0 * cfg.delta);
    if (!all_honest_idle())
      mr.warnings.push_back("tick " + std::to_string(tick) +
                            ": slots unfinished at deadline");
  };

  // Registration inbox, fed by the gossip sink for the open round.
  std::vector<RegistrationIn> reg_inbox;
  double reg_t0 = 0;
  bool reg_open = false;
  gossip.add_sink([&](const Bytes& payload, SimTime at) {
    if (!reg_open) return;
    auto pm = parse_registration(payload);
    if (!pm) return;
    reg_inbox.push_back(
        RegistrationIn{pm->pk, pm->pos, pm->has_solution, pm->x, at - reg_t0});
  });

  CvpvStats cvpv_stats;

  auto reconfig_tick = [&](uint64_t round) {
    // Finish in-flight slots under the old committee first.
    drain(sched.now() + double(slots_budget) * slot_cap + 20.0 * cfg.delta);

    double t0 = sched.now();
    Bytes r_reg = digest_bytes(beacon_value(beacon, 2 * round));
    reg_inbox.clear();
    reg_t0 = t0;
    reg_open = true;
    gossip.reset_seen();
    if (reg_mode == RegMode::SpamResistant) {
      gossip.set_filter([&gp, r_reg](const Bytes& payload) {
        auto pm = parse_registration(payload);
        if (!pm) return false;
        return pm->has_solution &&
               verify_dlog(gp, puzzle_target(pm->pk, pm->pos, r_reg, gp),
                           PuzzleSolution{pm->x});
      });
    } else {
      gossip.set_filter([](const Bytes& payload) {
        return parse_registration(payload).has_value();
      });
    }

    // Every participant re-registers each device with a fresh key, pacing
    // its own puzzle solves at rate R_H.
    for (const auto& p : cfg.participants) {
      for (uint64_t j = 0; j < p.devices.size(); j++) {
        uint64_t cell = p.devices[j];
        Enc e;
        e.str("participant-key").u64(cfg.seed).u64(round).str(p.id).u64(j);
        KeyPair kp = keygen(sha256(e));
        keyring.bind(kp.pk, p.id, kp.sk);
        RegistrationMsg msg;
        msg.pk = kp.pk;
        msg.pos = cell;
        if (reg_mode == RegMode::SpamResistant) {
          SolverBudget unlimited = SolverBudget::unlimited();
          auto sol =
              solve_dlog(gp, puzzle_target(kp.pk, cell, r_reg, gp), unlimited);
          msg.has_solution = true;
          msg.x = sol->x;
        }
        double at = t0 + double(j + 1) / cfg.R_H;
        std::string id = p.id;
        sched.schedule(at, [&gossip, id, payload = encode_registration(msg)] {
          gossip.submit(id, payload, 0);
        });
      }
    }

    RegActions actions = adv.registration_actions(
        reg_mode, gp, r_reg, clock, part, honest_cells, &devices, &keyring,
        round);
    mr.spam_submitted += actions.msgs.size();
    for (const auto& a : actions.msgs) {
      RegistrationMsg msg{a.pk, a.pos, a.has_solution, a.x};
      sched.schedule(t0 + a.received_at,
                     [&gossip, payload = encode_registration(msg)] {
                       gossip.submit("adversary", payload, 0);
                     });
    }

    sched.run_until(t0 + cfg.tau_register + cfg.delta);
    reg_open = false;

    RegistrationTally tally;
    EligibleDict dict =
        registration_round(reg_mode, reg_inbox, gp, r_reg, clock, &tally);
    mr.spam_forwarded += tally.dropped_invalid;
    if (logp) {
      logp->emit(sched.now(), "registration", "world", "*",
                 sha256(r_reg),
                 Json{{"round", round},
                      {"submitted", tally.submitted},
                      {"accepted", tally.accepted},
                      {"dropped_invalid", tally.dropped_invalid},
                      {"dropped_late", tally.dropped_late},
                      {"dropped_dup", tally.dropped_dup},
                      {"cells", dict.size()}});
    }

    Digest r_epoch = beacon_value(beacon, 2 * round + 1);
    double now_var = sched.now();
    VerifyEnv env;
    env.devices = &devices;
    env.keyring = &keyring;
    env.cvpv.lambda = cfg.lambda;
    env.cvpv.break_prob = cfg.adversary.break_prob;
    env.cvpv.epsilon_slack = cfg.epsilon_slack;
    env.cvpv.verifier_offset = cfg.verifier_offset;
    env.cvpv.honest_fail_prob = cfg.honest_fail_prob;
    env.cvpv.poq_time = cfg.poq_time;
    env.net = netcfg;
    env.part = part;
    env.clock = clock;
    env.ba_byz = adv.ba_byz();
    env.publish_fn = adv.publish_fn();
    env.log = logp;
    env.rng = &cvpv_rng;
    env.now = &now_var;
    env.stats = &cvpv_stats;

    auto is_byz_pk = [&](const Bytes& pk) {
      const Keyring::Entry* e = keyring.find(pk);
      if (!e) return true;
      if (e->owner == "adversary") return true;
      auto it = participant_byz.find(e->owner);
      return it != participant_byz.end() && it->second;
    };

    EpochReport rep = reconfiguration_epoch(com, dict, r_epoch, is_byz_pk, env);
    sched.run_until(now_var);

    mr.epochs++;
    mr.f_t.push_back(com.byz_count());
    CommitteeRow row;
    row.epoch = rep.epoch;
    row.f_t = com.byz_count();
    row.admitted = rep.admitted;
    row.evicted = rep.evicted;
    mr.committee.push_back(row);
    if (rep.success) {
      const Keyring::Entry* owner = keyring.find(com.seats.back().pk);
      mr.elections[owner ? owner->owner : "unknown"]++;
      accumulate_node_counters();
      build_nodes();
    }
  };

  for (uint64_t tick = 1; tick <= cfg.T; tick++) {
    steady_tick(tick);
    if (cfg.tau_reconfig > 0 && tick % cfg.tau_reconfig == 0)
      reconfig_tick(tick / cfg.tau_reconfig);
  }
  drain(sched.now() + double(slots_budget) * slot_cap + 20.0 * cfg.delta);
  accumulate_node_counters();

  for (const auto& [key, tr] : trackers)
    if (tr.honest_commits > 0) mr.commits++;
  mr.mean_commit_latency = latency_n ? latency_sum / double(latency_n) : 0;
  mr.committed_txs = submit_time.size() - pending.size();
  mr.pending_txs = pending.size();
  mr.spam_rejected = gossip.dropped_invalid();
  mr.cvpv_instances = cvpv_stats.instances;
  mr.cvpv_accepts = cvpv_stats.accepts;
  mr.cvpv_attack_accepts = cvpv_stats.attack_accepts;
  mr.model_violations = adv.model_violations() + net.policy_violations();

  res.committee_csv = mr.committee_csv();
  if (with_log) res.events_jsonl = log.to_jsonl();
  return res;
}

}  // namespace qpop
