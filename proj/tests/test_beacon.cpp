#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <set>
#include <vector>

#include "doctest.h"
#include "qpop/beacon.hpp"

using namespace qpop;

TEST_CASE("beacon values are deterministic per (seed, epoch)") {
  BeaconState a = BeaconState::from_u64(7);
  BeaconState b = BeaconState::from_u64(7);
  BeaconState c = BeaconState::from_u64(8);
  for (uint64_t e = 0; e < 100; e++) {
    CHECK(beacon_value(a, e) == beacon_value(b, e));
    CHECK(beacon_value(a, e) != beacon_value(c, e));
  }
}

TEST_CASE("beacon values are distinct across epochs") {
  BeaconState s = BeaconState::from_u64(1);
  std::set<Digest> seen;
  for (uint64_t e = 0; e < 10000; e++) seen.insert(beacon_value(s, e));
  CHECK(seen.size() == 10000);
}

TEST_CASE("sample_index stays in range and is total") {
  BeaconState s = BeaconState::from_u64(2);
  for (uint64_t len : {1ull, 2ull, 3ull, 17ull, 1000ull}) {
    for (uint64_t e = 0; e < 200; e++) {
      uint64_t idx = sample_index(beacon_value(s, e), len);
      CHECK(idx < len);
    }
  }
}

TEST_CASE("singleton sampling is constant zero") {
  BeaconState s = BeaconState::from_u64(3);
  for (uint64_t e = 0; e < 50; e++)
    CHECK(sample_index(beacon_value(s, e), 1) == 0);
}

// 99th-percentile chi-square cutoffs for df = len-1.
static void uniformity(uint64_t len, double cutoff) {
  BeaconState s = BeaconState::from_u64(4);
  const uint64_t draws = 20000;
  std::vector<uint64_t> counts(len, 0);
  for (uint64_t e = 0; e < draws; e++)
    counts[sample_index(beacon_value(s, e), len)]++;
  double expected = double(draws) / double(len);
  double chi2 = 0;
  for (uint64_t c : counts) {
    double d = double(c) - expected;
    chi2 += d * d / expected;
  }
  INFO("len=", len, " chi2=", chi2);
  CHECK(chi2 < cutoff);
}

TEST_CASE("sample_index is uniform at several widths") {
  uniformity(2, 6.634897);
  uniformity(7, 16.811894);
  uniformity(100, 134.641617);
}
