#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "qpop/beacon.hpp"
#include "qpop/reconfig.hpp"
#include "qpop/sig.hpp"

using namespace qpop;

namespace {

Bytes name_pk(const std::string& name) {
  return keygen(sha256(to_bytes("reconfig-" + name))).pk;
}

Bytes from_hex(const std::string& s) {
  auto nib = [](char c) {
    return uint8_t(c >= 'a' ? c - 'a' + 10 : c - '0');
  };
  Bytes out;
  for (size_t i = 0; i + 1 < s.size(); i += 2) {
    out.push_back(uint8_t(nib(s[i]) << 4 | nib(s[i + 1])));
  }
  return out;
}

Committee make_committee(uint64_t n, const std::set<int>& byz_seats = {},
                         const std::string& tag = "com") {
  Committee com;
  for (uint64_t i = 0; i < n; i++) {
    Seat s;
    s.pk = name_pk(tag + std::to_string(i));
    s.cell = i;
    s.byzantine = byz_seats.count(int(i)) > 0;
    com.seats.push_back(s);
  }
  return com;
}

// Candidate pool with real keys and optional quantum devices.
struct EpochWorld {
  Partition part = Partition::make(1.0, 16.0);
  DeviceRegistry devices;
  Keyring keyring;
  Xoshiro256ss rng = Xoshiro256ss::from_seed(11);
  CvpvStats stats;
  VerifyEnv env;

  EpochWorld() {
    env.devices = &devices;
    env.keyring = &keyring;
    env.part = part;
    env.cvpv.break_prob = 0;
    env.rng = &rng;
    env.stats = &stats;
  }

  Bytes candidate(const std::string& owner, uint64_t cell, bool with_device,
                  bool swap_key = false) {
    KeyPair kp = keygen(sha256(to_bytes("cand-" + owner)));
    KeyPair rogue = keygen(sha256(to_bytes("rogue-" + owner)));
    keyring.bind(kp.pk, owner, swap_key ? rogue.sk : kp.sk);
    if (with_device) {
      QuantumDevice d;
      d.id = devices.devices.size() + 1;
      d.owner = owner;
      d.cell = cell;
      d.poq_time = env.cvpv.poq_time;
      devices.devices.push_back(d);
    }
    return kp.pk;
  }
};

}  // namespace

TEST_CASE("committee rotation evicts the oldest seat") {
  Committee com = make_committee(4, {1});
  std::vector<Bytes> before = com.pks();
  CHECK(com.n() == 4);
  CHECK(com.f_bound() == 1);
  CHECK(com.byz_count() == 1);
  CHECK(com.byz_mask() == std::vector<bool>{false, true, false, false});
  CHECK(com.index == 1);

  Seat fresh;
  fresh.pk = name_pk("incoming");
  fresh.cell = 9;
  fresh.byzantine = true;
  com.rotate(fresh);

  CHECK(com.n() == 4);
  CHECK(com.index == 2);
  CHECK(com.seats.back().pk == fresh.pk);
  CHECK(com.seats.back().cell == 9);
  CHECK(com.seats.back().byzantine);
  for (uint64_t i = 0; i + 1 < 4; i++) CHECK(com.seats[i].pk == before[i + 1]);
  CHECK(com.byz_count() == 2);
}

TEST_CASE("publish quorum is two thirds rounded up") {
  for (uint64_t n = 1; n <= 200; n++) {
    CHECK(publish_quorum(n) == uint64_t(std::ceil(2.0 * double(n) / 3.0)));
  }
  CHECK(publish_quorum(4) == 3);
  CHECK(publish_quorum(7) == 5);
}

TEST_CASE("registration keeps each cell's keys sorted and distinct") {
  GroupParams gp = derive_group_small();
  ReconfigClock clock;
  Bytes r = digest_bytes(beacon_value(BeaconState::from_u64(3), 0));

  Bytes lo{0x01, 0xaa};
  Bytes hi{0x02, 0x00};
  std::vector<RegistrationIn> inbox{
      {hi, 4, false, 0, 0.2},
      {lo, 4, false, 0, 0.3},
      {hi, 4, false, 0, 0.4},               // duplicate (pk, cell)
      {hi, 6, false, 0, 0.4},               // same pk, different cell is fine
      {lo, 2, false, 0, clock.tau_register + clock.delta},        // boundary
      {lo, 3, false, 0, clock.tau_register + clock.delta + 0.01}, // late
  };
  RegistrationTally tally;
  EligibleDict dict = registration_round(RegMode::Plain, inbox, gp, r, clock,
                                         &tally);
  CHECK(tally.submitted == 6);
  CHECK(tally.accepted == 4);
  CHECK(tally.dropped_dup == 1);
  CHECK(tally.dropped_late == 1);
  CHECK(tally.dropped_invalid == 0);

  REQUIRE(dict.count(4) == 1);
  CHECK(dict.at(4) == std::vector<Bytes>{lo, hi});
  CHECK(dict.at(6) == std::vector<Bytes>{hi});
  CHECK(dict.at(2) == std::vector<Bytes>{lo});
  CHECK(dict.count(3) == 0);
}

TEST_CASE("spam-resistant registration demands a verifying solution") {
  GroupParams gp = derive_group_small();
  ReconfigClock clock;
  Bytes r = digest_bytes(beacon_value(BeaconState::from_u64(4), 0));
  Bytes pk = name_pk("solver");

  SolverBudget unlimited = SolverBudget::unlimited();
  PuzzleTarget target = puzzle_target(pk, 5, r, gp);
  auto sol = solve_dlog(gp, target, unlimited);
  REQUIRE(sol);

  std::vector<RegistrationIn> inbox{
      {pk, 5, true, sol->x, 0.1},
      {name_pk("bare"), 5, false, 0, 0.1},
      {name_pk("wrong"), 5, true, (sol->x + 1) % gp.q, 0.1},
  };
  RegistrationTally tally;
  EligibleDict dict = registration_round(RegMode::SpamResistant, inbox, gp, r,
                                         clock, &tally);
  CHECK(tally.accepted == 1);
  CHECK(tally.dropped_invalid == 2);
  REQUIRE(dict.count(5) == 1);
  CHECK(dict.at(5) == std::vector<Bytes>{pk});

  // A solution for one key does not transfer to another.
  std::vector<RegistrationIn> replay{{name_pk("thief"), 5, true, sol->x, 0.1}};
  RegistrationTally t2;
  registration_round(RegMode::SpamResistant, replay, gp, r, clock, &t2);
  CHECK(t2.accepted == 0);
  CHECK(t2.dropped_invalid == 1);
}

TEST_CASE("a rate-limited solver caps valid registrations per round") {
  GroupParams gp = derive_group_small();
  ReconfigClock clock;
  clock.tau_register = 1;
  Bytes r = digest_bytes(beacon_value(BeaconState::from_u64(5), 0));

  SolverBudget budget = SolverBudget::for_window(8, clock.tau_register);
  std::vector<RegistrationIn> inbox;
  for (uint64_t i = 0; i < 20; i++) {
    Bytes pk = name_pk("spam" + std::to_string(i));
    auto sol = solve_dlog(gp, puzzle_target(pk, i % 4, r, gp), budget);
    inbox.push_back({pk, i % 4, sol.has_value(), sol ? sol->x : 0, 0.1});
  }
  RegistrationTally tally;
  registration_round(RegMode::SpamResistant, inbox, gp, r, clock, &tally);
  CHECK(tally.accepted == 8);
  CHECK(tally.dropped_invalid == 12);

  // The plain mode has no such cap: every spoof enters the registry.
  RegistrationTally plain;
  registration_round(RegMode::Plain, inbox, gp, r, clock, &plain);
  CHECK(plain.accepted == 20);
}

TEST_CASE("a verified candidate wins a unanimous committee") {
  EpochWorld w;
  Committee com = make_committee(4);
  Bytes good = w.candidate("alice", 6, true);
  Bytes fake = w.candidate("mallory", 6, false);

  std::vector<CandidateRecord> recs;
  double now = 0;
  w.env.now = &now;
  auto winner = verify_candidate(com, 6, {fake, good}, w.env, &recs);
  REQUIRE(winner);
  CHECK(*winner == good);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].pk_hex == hex(fake));
  CHECK(!recs[0].success);
  CHECK(recs[0].published_ones == 0);
  CHECK(recs[0].r_bits == std::vector<int>{0, 0, 0, 0});
  CHECK(recs[1].pk_hex == hex(good));
  CHECK(recs[1].success);
  CHECK(recs[1].published_ones == 4);
  CHECK(recs[1].v_bits == std::vector<int>{1, 1, 1, 1});
  CHECK(w.stats.instances == 8);
  CHECK(w.stats.accepts == 4);
  CHECK(w.stats.attack_accepts == 0);

  // Two candidates, each costing n verifier windows, one agreement run
  // (3 rounds x f+1 phases) and one publish window.
  double per_candidate = 4 * w.env.clock.tau_v +
                         3 * double(ba_num_phases(com.f_bound())) *
                             w.env.clock.delta +
                         w.env.clock.delta;
  CHECK(now == doctest::Approx(2 * per_candidate));
}

TEST_CASE("a key-swapped candidate fails verification") {
  EpochWorld w;
  Committee com = make_committee(4);
  Bytes swapped = w.candidate("eve", 2, true, /*swap_key=*/true);
  std::vector<CandidateRecord> recs;
  auto winner = verify_candidate(com, 2, {swapped}, w.env, &recs);
  CHECK(!winner);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].r_bits == std::vector<int>{0, 0, 0, 0});
  CHECK(!recs[0].success);
}

TEST_CASE("byzantine seats cannot overturn the published verdict") {
  EpochWorld w;
  Committee com = make_committee(4, {0});
  Bytes good = w.candidate("bob", 3, true);
  Bytes fake = w.candidate("carl", 3, false);

  // The corrupted seat votes adversarially in agreement and withholds
  // its publication entirely.
  w.env.ba_byz = [](int, uint64_t, int, int) { return 2; };
  w.env.publish_fn = [](int, int) { return -1; };

  std::vector<CandidateRecord> recs;
  auto winner = verify_candidate(com, 3, {good}, w.env, &recs);
  REQUIRE(winner);
  CHECK(*winner == good);
  CHECK(recs[0].published_ones == 3);  // exactly the quorum for n = 4
  CHECK(recs[0].v_bits[0] == -1);

  // Boosting a failing candidate with a lone byzantine one is futile.
  w.env.publish_fn = [](int, int) { return 1; };
  recs.clear();
  winner = verify_candidate(com, 3, {fake}, w.env, &recs);
  CHECK(!winner);
  CHECK(recs[0].published_ones == 1);
  CHECK(!recs[0].success);
}

TEST_CASE("an epoch rotates on the first verified candidate") {
  EpochWorld w;
  Committee com = make_committee(4);
  std::vector<Bytes> before = com.pks();
  Bytes fake = w.candidate("spoofer", 7, false);
  Bytes good = w.candidate("dana", 7, true);

  EligibleDict dict;
  dict[7] = {fake, good};
  if (fake > good) std::swap(dict[7][0], dict[7][1]);

  Digest r_epoch = beacon_value(BeaconState::from_u64(8), 1);
  auto is_byz = [&](const Bytes& pk) { return pk == good; };
  EpochReport rep = reconfiguration_epoch(com, dict, r_epoch, is_byz, w.env);

  CHECK(rep.success);
  CHECK(!rep.exhausted);
  CHECK(rep.epoch == 1);
  CHECK(rep.sampled_cells == std::vector<uint64_t>{7});
  CHECK(rep.admitted == hex(good));
  CHECK(rep.admitted_cell == 7);
  CHECK(rep.evicted == hex(before[0]));
  CHECK(com.index == 2);
  CHECK(com.n() == 4);
  CHECK(com.seats.back().pk == good);
  CHECK(com.seats.back().cell == 7);
  CHECK(com.seats.back().byzantine);  // is_byz_pk verdict is recorded
  for (uint64_t i = 0; i + 1 < 4; i++) CHECK(com.seats[i].pk == before[i + 1]);
}

TEST_CASE("an epoch with no verifiable candidate leaves the committee alone") {
  EpochWorld w;
  Committee com = make_committee(4);
  std::vector<Bytes> before = com.pks();

  EpochReport empty = reconfiguration_epoch(com, {}, beacon_value(
      BeaconState::from_u64(9), 0), {}, w.env);
  CHECK(empty.exhausted);
  CHECK(!empty.success);
  CHECK(empty.sampled_cells.empty());
  CHECK(com.index == 1);
  CHECK(com.pks() == before);

  EligibleDict dict;
  dict[1] = {w.candidate("ghost1", 1, false)};
  dict[5] = {w.candidate("ghost5", 5, false)};
  EpochReport failed = reconfiguration_epoch(com, dict, beacon_value(
      BeaconState::from_u64(9), 1), {}, w.env);
  CHECK(failed.exhausted);
  CHECK(!failed.success);
  CHECK(failed.sampled_cells.size() == 2);  // every cell tried, none admitted
  CHECK(failed.candidates.size() == 2);
  CHECK(com.index == 1);
  CHECK(com.pks() == before);
}

TEST_CASE("epoch sampling is uniform over the registry cells") {
  EpochWorld w;  // no devices bound: every candidate fails, all cells sampled
  Committee com = make_committee(4);
  BeaconState beacon = BeaconState::from_u64(77);

  const uint64_t kCells = 5;
  const uint64_t kEpochs = 10000;
  std::vector<Bytes> pks;
  for (uint64_t c = 0; c < kCells; c++) {
    pks.push_back(w.candidate("cell" + std::to_string(c), c, false));
  }
  std::vector<uint64_t> first_counts(kCells, 0);
  for (uint64_t e = 0; e < kEpochs; e++) {
    EligibleDict dict;
    for (uint64_t c = 0; c < kCells; c++) dict[c] = {pks[c]};
    EpochReport rep =
        reconfiguration_epoch(com, dict, beacon_value(beacon, e), {}, w.env);
    REQUIRE(rep.sampled_cells.size() == kCells);
    std::set<uint64_t> seen(rep.sampled_cells.begin(),
                            rep.sampled_cells.end());
    REQUIRE(seen.size() == kCells);  // sampling without replacement
    first_counts[rep.sampled_cells[0]]++;
  }
  CHECK(com.index == 1);

  double expect = double(kEpochs) / double(kCells);
  double sigma = std::sqrt(double(kEpochs) * (1.0 / kCells) *
                           (1.0 - 1.0 / kCells));
  for (uint64_t c = 0; c < kCells; c++) {
    CHECK(std::abs(double(first_counts[c]) - expect) <= 3 * sigma);
  }
}

TEST_CASE("committees replay from the genesis set and the admission record") {
  EpochWorld w;
  Committee live = make_committee(4, {}, "replay");
  Committee genesis = live;

  std::vector<EpochReport> history;
  for (uint64_t e = 0; e < 5; e++) {
    Bytes pk = w.candidate("joiner" + std::to_string(e), e + 2, true);
    EligibleDict dict;
    dict[e + 2] = {pk};
    history.push_back(reconfiguration_epoch(
        live, dict, beacon_value(BeaconState::from_u64(21), e), {}, w.env));
    REQUIRE(history.back().success);
  }
  CHECK(live.index == 6);

  Committee replay = genesis;
  for (const auto& rep : history) {
    REQUIRE(rep.admitted.size() == 64);
    Seat s;
    for (const auto& cand : rep.candidates) {
      if (cand.pk_hex == rep.admitted) s.cell = cand.cell;
    }
    s.pk = from_hex(rep.admitted);
    replay.rotate(s);
  }
  CHECK(replay.index == live.index);
  REQUIRE(replay.n() == live.n());
  for (uint64_t i = 0; i < live.n(); i++) {
    CHECK(replay.seats[i].pk == live.seats[i].pk);
    CHECK(replay.seats[i].cell == live.seats[i].cell);
  }
}

TEST_CASE("verification transcripts are deterministic") {
  auto run_once = [] {
    EpochWorld w;
    EventLog log;
    w.env.log = &log;
    double now = 0;
    w.env.now = &now;
    Committee com = make_committee(4, {2});
    w.env.ba_byz = [](int, uint64_t, int round, int) {
      return round == 2 ? 2 : 0;
    };
    Bytes good = w.candidate("det", 4, true);
    EligibleDict dict;
    dict[4] = {good};
    reconfiguration_epoch(com, dict, beacon_value(BeaconState::from_u64(31), 0),
                          {}, w.env);
    return log.to_jsonl();
  };
  std::string a = run_once();
  std::string b = run_once();
  CHECK(a == b);
  CHECK(a.find("\"kind\":\"cvpv\"") != std::string::npos);
  CHECK(a.find("\"kind\":\"ba-vote\"") != std::string::npos);
  CHECK(a.find("\"kind\":\"publish\"") != std::string::npos);
  CHECK(a.find("\"kind\":\"reconfig\"") != std::string::npos);
}
