#include "qpop/cvpv.hpp"

#include <stdexcept>

namespace qpop {

Partition Partition::make(double gamma, double line_length) {
  if (gamma <= 0 || line_length <= 0) {
    throw std::invalid_argument("partition needs positive gamma and length");
  }
  Partition p;
  p.gamma = gamma;
  p.line_length = line_length;
  p.cell_count = uint64_t(std::floor(line_length / gamma));
  if (p.cell_count == 0) throw std::invalid_argument("no cells in partition");
  return p;
}

SimTime response_deadline(SimTime t_c, const CvpvConfig& cfg,
                          const NetworkConfig& net) {
  return t_c + cfg.poq_time + cfg.verifier_offset / net.c_signal +
         cfg.epsilon_slack;
}

CvpvOutcome run_cvpv_instance(uint64_t claimed_cell, const Bytes& pk,
                              const DeviceRegistry& devices,
                              const Keyring& keyring, const CvpvConfig& cfg,
                              const Partition& part, const NetworkConfig& net,
                              SimTime t_start, Xoshiro256ss& rng,
                              EventLog* log) {
  if (claimed_cell >= part.cell_count) {
    throw std::invalid_argument("claimed cell outside partition");
  }
  CvpvOutcome out;
  double center = part.center(claimed_cell);
  double dv_delay = cfg.verifier_offset / net.c_signal;
  SimTime t_c = t_start + dv_delay;  // both challenges meet the cell center
  SimTime deadline = response_deadline(t_c, cfg, net);

  const Keyring::Entry* entry = keyring.find(pk);
  const QuantumDevice* dev =
      entry ? devices.online_device(entry->owner, claimed_cell) : nullptr;

  SimTime arrival = 0;
  bool sig_ok = false;
  if (dev) {
    // Honest path: device at the cell center answers both transceivers.
    arrival = t_c + dev->poq_time + dv_delay;
    Enc resp;
    resp.str("cvpv-response")
        .bytes(pk)
        .u64(claimed_cell)
        .u64(uint64_t(t_c * 1e9));
    Bytes sig = sign(entry->sk, resp.out);
    sig_ok = verify(pk, resp.out, sig);
    bool timely = arrival <= deadline;
    bool flaked = cfg.honest_fail_prob > 0 && rng.bernoulli(cfg.honest_fail_prob);
    out.accepted = timely && sig_ok && !flaked;
    out.reason = out.accepted ? "accepted"
                 : !timely    ? "late_response"
                 : !sig_ok    ? "bad_signature"
                              : "honest_failure";
  } else {
    // Attack path: nobody with pk's key is in the claimed cell.
    double bp = cfg.effective_break_prob();
    out.accepted = bp > 0 && rng.bernoulli(bp);
    out.reason = out.accepted ? "soundness_break" : "no_device_in_cell";
  }

  if (log) {
    out.transcript = Json{{"claimed_cell", claimed_cell},
                          {"pk", hex(pk)},
                          {"center", center},
                          {"t_c", t_c},
                          {"deadline", deadline},
                          {"arrival", dev ? Json(arrival) : Json(nullptr)},
                          {"sig_ok", sig_ok},
                          {"reason", out.reason}};
    Enc pe;
    pe.str("cvpv").bytes(pk).u64(claimed_cell).u64(out.accepted ? 1 : 0);
    log->emit(t_start, "cvpv", "verifier", hex(pk).substr(0, 8), sha256(pe),
              out.transcript);
  }
  return out;
}

}  // namespace qpop
