#include "qpop/committee_mc.hpp"

#include <cmath>
#include <stdexcept>

namespace qpop {

namespace {

struct TrialAcc {
  uint8_t violated = 0;
  uint64_t steps_violating = 0;
  uint64_t sum_f = 0;  // over counted steps
  uint64_t steps_counted = 0;
};

// Largest f_1 with f_1 < (1/3 - epsilon) n.
uint64_t genesis_cap(uint64_t n, double epsilon) {
  double lim = (1.0 / 3 - epsilon) * double(n);
  uint64_t cap = uint64_t(std::ceil(lim));
  return cap > 0 ? cap - 1 : 0;
}

template <bool Recount>
TrialAcc run_trial(const McParams& p, uint64_t trial) {
  Xoshiro256ss rng = rng_substream(p.seed, "mc-trial", trial);
  const uint64_t n = p.n;
  const uint64_t k_star = violation_threshold(n);
  const uint64_t f1_max = genesis_cap(n, p.epsilon);

  std::vector<uint8_t> w(n);
  uint64_t f = 0;
  do {
    f = 0;
    for (uint64_t i = 0; i < n; i++) {
      w[i] = rng.bernoulli(p.rho) ? 1 : 0;
      f += w[i];
    }
  } while (p.cap_genesis && f > f1_max);

  TrialAcc acc;
  uint64_t head = 0;
  const bool warm = p.T > n;  // count past warm-up only when possible
  for (uint64_t t = 1; t <= p.T; t++) {
    uint8_t b = rng.bernoulli(p.rho) ? 1 : 0;
    if constexpr (Recount) {
      w[head] = b;
      head = (head + 1) % n;
      f = 0;
      for (uint64_t i = 0; i < n; i++) f += w[i];
    } else {
      f += b;
      f -= w[head];
      w[head] = b;
      head = (head + 1) % n;
    }
    if (f >= k_star) {
      acc.violated = 1;
      acc.steps_violating++;
    }
    if (!warm || t > n) {
      acc.sum_f += f;
      acc.steps_counted++;
    }
  }
  return acc;
}

McEstimate merge(const McParams& p, const std::vector<TrialAcc>& accs) {
  McEstimate est;
  est.trials = p.trials;
  est.threshold = violation_threshold(p.n);
  est.steps_total = p.trials * p.T;

  long double sum_m = 0, sum_m2 = 0;
  for (const TrialAcc& a : accs) {
    est.violation_count += a.violated;
    est.steps_violating += a.steps_violating;
    long double m = a.steps_counted
                        ? (long double)(a.sum_f) / (long double)(a.steps_counted)
                        : 0.0L;
    sum_m += m;
    sum_m2 += m * m;
  }
  est.per_step_tail =
      est.steps_total ? double(est.steps_violating) / double(est.steps_total)
                      : 0;
  est.wilson_upper_tail = wilson_upper95(est.steps_violating, est.steps_total);
  if (p.rho > 0 && p.rho < 1.0 / 3) {
    est.chernoff_per_step = chernoff_bound(p.n, p.rho);
    est.union_bound = double(p.T) * est.chernoff_per_step;
  }
  if (p.trials > 0) {
    long double mean = sum_m / p.trials;
    est.mean_f = double(mean);
    if (p.trials > 1) {
      long double var = (sum_m2 - (long double)(p.trials) * mean * mean) /
                        (long double)(p.trials - 1);
      if (var < 0) var = 0;
      est.ci95_half = double(1.959963984540054L *
                             sqrtl(var / (long double)(p.trials)));
    }
  }
  return est;
}

}  // namespace

McEstimate committee_mc(const McParams& p) {
  if (p.rho < 0 || p.rho > 1) throw std::invalid_argument("rho must be in [0,1]");
  std::vector<TrialAcc> accs(p.trials);
  int64_t count = int64_t(p.trials);
#pragma omp parallel for schedule(dynamic, 16)
  for (int64_t i = 0; i < count; i++) {
    accs[size_t(i)] = run_trial<false>(p, uint64_t(i));
  }
  return merge(p, accs);
}

McEstimate committee_mc_serial(const McParams& p) {
  if (p.rho < 0 || p.rho > 1) throw std::invalid_argument("rho must be in [0,1]");
  std::vector<TrialAcc> accs(p.trials);
  for (uint64_t i = 0; i < p.trials; i++) {
    accs[i] = run_trial<true>(p, i);
  }
  return merge(p, accs);
}

double chernoff_bound(uint64_t n, double rho) {
  if (rho <= 0 || rho >= 1.0 / 3) {
    throw std::invalid_argument("chernoff bound needs 0 < rho < 1/3");
  }
  return std::exp(double(n) * (1 - 3 * rho) * std::log(3 * rho) / 6);
}

double wilson_upper95(uint64_t k, uint64_t n) {
  if (n == 0) return 1;
  const double z = 1.959963984540054;
  double phat = double(k) / double(n);
  double z2 = z * z;
  double denom = 1 + z2 / double(n);
  double center = phat + z2 / (2 * double(n));
  double rad =
      z * std::sqrt(phat * (1 - phat) / double(n) + z2 / (4.0 * double(n) * double(n)));
  return (center + rad) / denom;
}

long double tail_exact(uint64_t n, double rho, uint64_t k) {
  if (k == 0) return 1;
  if (rho <= 0) return 0;
  if (rho >= 1) return 1;
  long double lp = logl((long double)(rho));
  long double lq = logl(1.0L - (long double)(rho));
  long double acc = 0;
  for (uint64_t j = k; j <= n; j++) {
    long double lc = lgammal((long double)(n) + 1) -
                     lgammal((long double)(j) + 1) -
                     lgammal((long double)(n - j) + 1);
    acc += expl(lc + (long double)(j)*lp + (long double)(n - j) * lq);
  }
  return acc;
}

TailEstimate tail_importance(uint64_t n, double rho, uint64_t k,
                             uint64_t samples, uint64_t seed) {
  TailEstimate out;
  out.samples = samples;
  if (k == 0) {
    out.p_hat = 1;
    out.ucl95 = 1;
    return out;
  }
  double theta = double(k) / double(n);
  if (rho >= theta) {
    throw std::invalid_argument("tilt requires rho < k/n");
  }
  double la = std::log(rho / theta);
  double lb = std::log((1 - rho) / (1 - theta));
  auto weight = [&](uint64_t x) {
    return std::exp(double(x) * la + double(n - x) * lb);
  };
  double wmax = weight(k);  // weights decrease in x above the tilt mean

  Xoshiro256ss rng = rng_substream(seed, "tail-is", (uint64_t(n) << 32) ^ k);
  long double acc = 0;
  for (uint64_t s = 0; s < samples; s++) {
    uint64_t x = 0;
    for (uint64_t i = 0; i < n; i++) x += rng.bernoulli(theta) ? 1 : 0;
    if (x >= k) acc += (long double)(weight(x));
  }
  out.p_hat = double(acc / (long double)(samples));
  // Hoeffding bound for a mean of [0, wmax]-valued draws.
  out.ucl95 = out.p_hat +
              wmax * std::sqrt(std::log(1.0 / 0.05) / (2.0 * double(samples)));
  return out;
}

std::vector<uint64_t> projection_trajectory(
    const std::vector<uint8_t>& genesis_byz,
    const std::vector<uint8_t>& cell_byz, const BeaconState& beacon,
    uint64_t epochs) {
  std::vector<uint8_t> window = genesis_byz;
  uint64_t f = 0;
  for (uint8_t b : window) f += b;
  std::vector<uint64_t> traj{f};
  for (uint64_t e = 1; e <= epochs; e++) {
    Digest r = beacon_value(beacon, 2 * e + 1);
    Enc enc;
    enc.str("sample").bytes(digest_bytes(r)).u64(0);
    uint64_t idx = sample_index(sha256(enc), cell_byz.size());
    uint8_t b = cell_byz[idx];
    f += b;
    f -= window.front();
    window.erase(window.begin());
    window.push_back(b);
    traj.push_back(f);
  }
  return traj;
}

Json McEstimate::to_json() const {
  return Json{
      {"trials", trials},
      {"violation_count", violation_count},
      {"threshold", threshold},
      {"steps_total", steps_total},
      {"steps_violating", steps_violating},
      {"per_step_tail", per_step_tail},
      {"wilson_upper_tail", wilson_upper_tail},
      {"chernoff_per_step", chernoff_per_step},
      {"union_bound", union_bound},
      {"mean_f", mean_f},
      {"ci95_half", ci95_half},
  };
}

}  // namespace qpop
