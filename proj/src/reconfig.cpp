#include "qpop/reconfig.hpp"

#include <algorithm>

#include "qpop/wire.hpp"

namespace qpop {

uint64_t Committee::byz_count() const {
  uint64_t c = 0;
  for (const auto& s : seats) c += s.byzantine ? 1 : 0;
  return c;
}

std::vector<Bytes> Committee::pks() const {
  std::vector<Bytes> out;
  out.reserve(seats.size());
  for (const auto& s : seats) out.push_back(s.pk);
  return out;
}

std::vector<bool> Committee::byz_mask() const {
  std::vector<bool> out;
  out.reserve(seats.size());
  for (const auto& s : seats) out.push_back(s.byzantine);
  return out;
}

void Committee::rotate(Seat incoming) {
  seats.erase(seats.begin());
  seats.push_back(std::move(incoming));
  index++;
}

EligibleDict registration_round(RegMode mode,
                                const std::vector<RegistrationIn>& inbox,
                                const GroupParams& gp, const Bytes& r,
                                const ReconfigClock& clock,
                                RegistrationTally* tally) {
  EligibleDict dict;
  RegistrationTally local;
  RegistrationTally& t = tally ? *tally : local;
  for (const auto& msg : inbox) {
    t.submitted++;
    if (msg.received_at > clock.tau_register + clock.delta) {
      t.dropped_late++;
      continue;
    }
    if (mode == RegMode::SpamResistant) {
      if (!msg.has_solution ||
          !verify_dlog(gp, puzzle_target(msg.pk, msg.pos, r, gp),
                       PuzzleSolution{msg.x})) {
        t.dropped_invalid++;
        continue;
      }
    }
    auto& pks = dict[msg.pos];
    auto it = std::lower_bound(pks.begin(), pks.end(), msg.pk);
    if (it != pks.end() && *it == msg.pk) {
      t.dropped_dup++;
      continue;
    }
    pks.insert(it, msg.pk);
    t.accepted++;
  }
  return dict;
}

namespace {

Digest candidate_ctx(uint64_t committee_index, uint64_t cpos, const Bytes& pk) {
  Enc e;
  e.str("candidate").u64(committee_index).u64(cpos).bytes(pk);
  return sha256(e);
}

}  // namespace

std::optional<Bytes> verify_candidate(const Committee& com, uint64_t cpos,
                                      const std::vector<Bytes>& cpks,
                                      VerifyEnv& env,
                                      std::vector<CandidateRecord>* records) {
  const uint64_t n = com.n();
  const uint64_t f = com.f_bound();
  const std::vector<bool> byz = com.byz_mask();
  double local_now = 0;
  double& now = env.now ? *env.now : local_now;

  for (const Bytes& pk : cpks) {
    CandidateRecord rec;
    rec.pk_hex = hex(pk);
    rec.cell = cpos;
    const Digest ctx = candidate_ctx(com.index, cpos, pk);

    // Each member verifies in its own window, in seat order.
    double t0 = now;
    rec.r_bits.resize(n);
    for (uint64_t j = 0; j < n; j++) {
      double window_start = t0 + double(j) * env.clock.tau_v;
      CvpvOutcome out =
          run_cvpv_instance(cpos, pk, *env.devices, *env.keyring, env.cvpv,
                            env.part, env.net, window_start, *env.rng, env.log);
      rec.r_bits[j] = out.accepted ? 1 : 0;
      if (env.stats) {
        env.stats->instances++;
        if (out.accepted) env.stats->accepts++;
        if (out.reason == "soundness_break") env.stats->attack_accepts++;
      }
    }
    now = t0 + double(n) * env.clock.tau_v;

    // Agree on the verdict bit.
    BaMsgFn tap;
    if (env.log) {
      double ba_base = now;
      double delta = env.clock.delta;
      EventLog* log = env.log;
      tap = [ctx, ba_base, delta, log](uint64_t phase, int round, int from,
                                       int to, int v) {
        double t = ba_base + (double(3 * (phase - 1) + uint64_t(round)) - 1) * delta;
        log->emit(t, "ba-vote", std::to_string(from), std::to_string(to),
                  sha256(encode_ba_vote(ctx, phase, uint64_t(round),
                                        uint64_t(v))));
      };
    }
    BaSyncResult ba = ba_run_sync(n, f, rec.r_bits, byz,
                                  env.ba_byz ? env.ba_byz : BaByzFn{}, tap);
    now += 3 * double(ba_num_phases(f)) * env.clock.delta;

    // Publish; absent members count as publishing 0 after delta.
    rec.v_bits.resize(n);
    uint64_t ones = 0;
    for (uint64_t j = 0; j < n; j++) {
      int v = ba.bits[j];
      if (byz[j] && env.publish_fn) v = env.publish_fn(int(j), v);
      rec.v_bits[j] = v;
      if (v == 1) ones++;
      if (env.log && v >= 0) {
        env.log->emit(now, "publish", std::to_string(j), "*",
                      sha256(encode_publish(ctx, uint64_t(v))));
      }
    }
    now += env.clock.delta;

    rec.published_ones = ones;
    rec.success = ones >= publish_quorum(n);
    if (records) records->push_back(rec);
    if (rec.success) return pk;
  }
  return std::nullopt;
}

Json EpochReport::to_json() const {
  Json cand_pks = Json::array();
  Json outcomes = Json::array();
  for (const auto& c : candidates) {
    cand_pks.push_back(c.pk_hex);
    outcomes.push_back(c.success ? "success" : "failure");
  }
  Json cells = Json::array();
  for (uint64_t c : sampled_cells) cells.push_back(c);
  return Json{{"epoch", epoch},        {"sampled_cells", cells},
              {"candidate_pks", cand_pks}, {"outcomes", outcomes},
              {"evicted", evicted},    {"admitted", admitted}};
}

EpochReport reconfiguration_epoch(
    Committee& com, EligibleDict dict, const Digest& r_epoch,
    const std::function<bool(const Bytes&)>& is_byz_pk, VerifyEnv& env) {
  EpochReport report;
  report.epoch = com.index;

  uint64_t attempt = 0;
  while (!dict.empty()) {
    Enc e;
    e.str("sample").bytes(digest_bytes(r_epoch)).u64(attempt);
    attempt++;
    uint64_t k = sample_index(sha256(e), dict.size());
    auto it = dict.begin();
    std::advance(it, k);
    uint64_t cpos = it->first;
    std::vector<Bytes> cpks = it->second;
    dict.erase(it);
    report.sampled_cells.push_back(cpos);

    auto winner = verify_candidate(com, cpos, cpks, env, &report.candidates);
    if (winner) {
      report.success = true;
      report.evicted = hex(com.seats.front().pk);
      report.admitted = hex(*winner);
      report.admitted_cell = cpos;
      Seat incoming;
      incoming.pk = *winner;
      incoming.cell = cpos;
      incoming.byzantine = is_byz_pk ? is_byz_pk(*winner) : false;
      com.rotate(std::move(incoming));
      break;
    }
  }
  report.exhausted = !report.success;

  if (env.log) {
    double t = env.now ? *env.now : 0;
    env.log->emit(t, "reconfig", "world", "*",
                  sha256(to_bytes(report.to_json().dump())), report.to_json());
  }
  return report;
}

}  // namespace qpop
