#include <chrono>
#include <cstdio>

#include "qpop/committee_mc.hpp"

using namespace qpop;
using Clock = std::chrono::steady_clock;

namespace {

double run_ms(McEstimate (*fn)(const McParams&), const McParams& p,
              McEstimate* out) {
  auto t0 = Clock::now();
  *out = fn(p);
  auto t1 = Clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

bool same(const McEstimate& a, const McEstimate& b) {
  return a.trials == b.trials && a.violation_count == b.violation_count &&
         a.steps_total == b.steps_total &&
         a.steps_violating == b.steps_violating && a.mean_f == b.mean_f &&
         a.ci95_half == b.ci95_half;
}

}  // namespace

int main() {
  const McParams cases[] = {
      {.n = 100, .rho = 0.15, .T = 1000, .trials = 1000, .seed = 7},
      {.n = 200, .rho = 0.20, .T = 2000, .trials = 2000, .seed = 7},
      {.n = 50, .rho = 0.30, .T = 5000, .trials = 4000, .seed = 7},
  };
  printf("%-28s %12s %12s %8s %s\n", "case", "serial ms", "parallel ms",
         "speedup", "identical");
  bool all_same = true;
  for (const McParams& p : cases) {
    McEstimate s, par;
    double ts = run_ms(committee_mc_serial, p, &s);
    double tp = run_ms(committee_mc, p, &par);
    bool ok = same(s, par);
    all_same &= ok;
    char label[64];
    snprintf(label, sizeof label, "n=%llu rho=%.2f T=%llu x%llu",
             (unsigned long long)p.n, p.rho, (unsigned long long)p.T,
             (unsigned long long)p.trials);
    printf("%-28s %12.1f %12.1f %7.2fx %s\n", label, ts, tp, ts / tp,
           ok ? "yes" : "NO");
  }
  return all_same ? 0 : 1;
}
