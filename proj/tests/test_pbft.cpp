#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <map>
#include <memory>
#include <set>
#include <vector>

#include "doctest.h"
#include "qpop/ba.hpp"
#include "qpop/pbft.hpp"
#include "qpop/rng.hpp"
#include "qpop/sig.hpp"

using namespace qpop;

namespace {

std::vector<KeyPair> make_keys(uint64_t n, const std::string& tag = "seat") {
  std::vector<KeyPair> kps;
  for (uint64_t i = 0; i < n; i++) {
    kps.push_back(keygen(sha256(to_bytes(tag + std::to_string(i)))));
  }
  return kps;
}

std::vector<Bytes> pks_of(const std::vector<KeyPair>& kps) {
  std::vector<Bytes> out;
  for (const auto& kp : kps) out.push_back(kp.pk);
  return out;
}

SignedHeader sign_header(const KeyPair& kp, const Bytes& header) {
  return SignedHeader{header, kp.pk, sign(kp.sk, header)};
}

Cert sign_quorum(const std::vector<KeyPair>& kps, std::vector<int> signers,
                 const PbftHeader& hd) {
  Bytes header = encode_pbft_header(hd);
  Cert c;
  for (int i : signers) c.push_back(sign_header(kps[i], header));
  return c;
}

Msg make_msg(const KeyPair& kp, MsgKind kind, uint64_t c, uint64_t v,
             uint64_t s, const Digest& h) {
  Msg m;
  m.kind = kind;
  m.sh = sign_header(kp, encode_pbft_header(PbftHeader{kind, c, v, s, h}));
  return m;
}

// Records a node's outgoing traffic; timers are armed but never fire.
struct Probe {
  std::vector<std::pair<int, Msg>> sent;
  std::vector<Msg> bcast;
  Batch next_batch;

  PbftNode::Hooks hooks() {
    PbftNode::Hooks h;
    h.send = [this](int to, const Msg& m) { sent.push_back({to, m}); };
    h.broadcast = [this](const Msg& m) { bcast.push_back(m); };
    h.now = [] { return 0.0; };
    h.defer = [](SimTime, std::function<void()>) {};
    h.verify = [](const Bytes& pk, const Bytes& msg, const Bytes& sig) {
      return verify(pk, msg, sig);
    };
    h.pick_batch = [this] { return next_batch; };
    return h;
  }

  uint64_t count(MsgKind k) const {
    uint64_t n = 0;
    for (const auto& m : bcast) n += m.kind == k;
    return n;
  }
  const Msg* last(MsgKind k) const {
    for (auto it = bcast.rbegin(); it != bcast.rend(); ++it) {
      if (it->kind == k) return &*it;
    }
    return nullptr;
  }
};

SignedHeader status_sh(const KeyPair& kp, const StatusHeader& sth) {
  return sign_header(kp, encode_status_header(sth));
}

// Moves a fresh follower into view 1 via a valid new-view from seat 1.
void to_view1(PbftNode& node, const std::vector<KeyPair>& kps) {
  PbftHeader vc{MsgKind::ViewChange, 0, 0, 0, Digest{}};
  Msg nv = make_msg(kps[1], MsgKind::NewView, 0, 1, 0, Digest{});
  nv.cert = sign_quorum(kps, {0, 1, 2}, vc);
  node.on_message(1, nv);
  REQUIRE(node.view() == 1);
}

}  // namespace

TEST_CASE("fault bound and leader rotation") {
  CHECK(pbft_f(1) == 0);
  CHECK(pbft_f(3) == 0);
  CHECK(pbft_f(4) == 1);
  CHECK(pbft_f(6) == 1);
  CHECK(pbft_f(7) == 2);
  CHECK(pbft_f(10) == 3);
  CHECK(pbft_f(100) == 33);

  std::vector<Bytes> comm{to_bytes("a"), to_bytes("b"), to_bytes("c")};
  CHECK(leader_of(comm, 0) == comm[0]);
  CHECK(leader_of(comm, 1) == comm[1]);
  CHECK(leader_of(comm, 5) == comm[2]);
}

TEST_CASE("header encodings round-trip") {
  PbftHeader hd{MsgKind::Commit, 3, 7, 11, sha256(to_bytes("x"))};
  auto back = parse_pbft_header(encode_pbft_header(hd));
  REQUIRE(back);
  CHECK(back->kind == MsgKind::Commit);
  CHECK(back->c == 3);
  CHECK(back->v == 7);
  CHECK(back->s == 11);
  CHECK(back->h == hd.h);
  CHECK(!parse_pbft_header(Bytes{1, 2, 3}));
  CHECK(!parse_pbft_header(Bytes{}));

  StatusHeader sth;
  sth.c = 2;
  sth.v = 4;
  sth.last_committed = 9;
  sth.h_committed = sha256(to_bytes("c9"));
  sth.next_slot = 10;
  sth.has_accept = true;
  sth.h_accepted = sha256(to_bytes("a10"));
  sth.rank = 3;
  auto sb = parse_status_header(encode_status_header(sth));
  REQUIRE(sb);
  CHECK(sb->last_committed == 9);
  CHECK(sb->h_committed == sth.h_committed);
  CHECK(sb->next_slot == 10);
  CHECK(sb->has_accept);
  CHECK(sb->h_accepted == sth.h_accepted);
  CHECK(sb->rank == 3);
  CHECK(!parse_status_header(encode_pbft_header(hd)));

  Batch b{Tx{1, 1}, Tx{2, 2}};
  Batch swapped{Tx{2, 2}, Tx{1, 1}};
  CHECK(batch_digest(b) == batch_digest(b));
  CHECK(batch_digest(b) != batch_digest(swapped));
  CHECK(batch_digest(b) != batch_digest(Batch{}));
}

TEST_CASE("quorum certificate validation") {
  auto kps = make_keys(4, "qc");
  auto comm = pks_of(kps);
  VerifyFn vf = [](const Bytes& pk, const Bytes& m, const Bytes& s) {
    return verify(pk, m, s);
  };
  PbftHeader hd{MsgKind::Commit, 0, 2, 5, sha256(to_bytes("val"))};

  Cert ok = sign_quorum(kps, {0, 1, 2}, hd);
  auto q = validate_quorum_cert(ok, MsgKind::Commit, 0, 5, comm, 3, vf);
  REQUIRE(q);
  CHECK(q->v == 2);
  CHECK(q->h == hd.h);

  CHECK(!validate_quorum_cert(ok, MsgKind::Commit, 0, 6, comm, 3, vf));
  CHECK(!validate_quorum_cert(ok, MsgKind::Prepare, 0, 5, comm, 3, vf));
  CHECK(!validate_quorum_cert(ok, MsgKind::Commit, 1, 5, comm, 3, vf));
  CHECK(!validate_quorum_cert({}, MsgKind::Commit, 0, 5, comm, 3, vf));

  Cert dup = sign_quorum(kps, {0, 0, 1}, hd);
  CHECK(!validate_quorum_cert(dup, MsgKind::Commit, 0, 5, comm, 3, vf));

  Cert sparse = sign_quorum(kps, {0, 1}, hd);
  CHECK(!validate_quorum_cert(sparse, MsgKind::Commit, 0, 5, comm, 3, vf));

  Cert bad = ok;
  bad[1].sig[0] ^= 1;
  CHECK(!validate_quorum_cert(bad, MsgKind::Commit, 0, 5, comm, 3, vf));

  Cert outsider = ok;
  outsider[2] = sign_header(keygen(sha256(to_bytes("intruder"))),
                            encode_pbft_header(hd));
  CHECK(!validate_quorum_cert(outsider, MsgKind::Commit, 0, 5, comm, 3, vf));

  PbftHeader hd2 = hd;
  hd2.v = 3;
  Cert mixed{ok[0], ok[1], sign_header(kps[2], encode_pbft_header(hd2))};
  CHECK(!validate_quorum_cert(mixed, MsgKind::Commit, 0, 5, comm, 3, vf));

  CHECK(validate_matching_cert(ok, encode_pbft_header(hd), comm, 3, vf));
  CHECK(!validate_matching_cert(ok, encode_pbft_header(hd2), comm, 3, vf));
  CHECK(!validate_matching_cert(ok, encode_pbft_header(hd), comm, 4, vf));
}

TEST_CASE("a follower drops malformed or unauthorized messages") {
  auto kps = make_keys(4, "drop");
  Probe probe;
  PbftNode node(1, kps[1].pk, kps[1].sk, pks_of(kps), 0, 1.0, probe.hooks());
  node.start();
  Digest h = batch_digest(Batch{Tx{1, 1}});

  Msg outsider = make_msg(keygen(sha256(to_bytes("zz"))), MsgKind::Propose, 0,
                          0, 1, h);
  outsider.batch = Batch{Tx{1, 1}};
  node.on_message(0, outsider);
  CHECK(node.invalid_dropped() == 1);

  Msg forged = make_msg(kps[0], MsgKind::Propose, 0, 0, 1, h);
  forged.batch = Batch{Tx{1, 1}};
  forged.sh.sig[3] ^= 1;
  node.on_message(0, forged);
  CHECK(node.invalid_dropped() == 2);

  // Proposal signed by a member who is not the view's leader.
  Msg usurper = make_msg(kps[2], MsgKind::Propose, 0, 0, 1, h);
  usurper.batch = Batch{Tx{1, 1}};
  node.on_message(2, usurper);
  CHECK(node.invalid_dropped() == 3);

  // Kind in the header disagrees with the message kind.
  Msg crossed = make_msg(kps[0], MsgKind::Prepare, 0, 0, 1, h);
  crossed.kind = MsgKind::Propose;
  node.on_message(0, crossed);
  CHECK(node.invalid_dropped() == 4);

  // Wrong committee index.
  Msg stray = make_msg(kps[0], MsgKind::Propose, 9, 0, 1, h);
  stray.batch = Batch{Tx{1, 1}};
  node.on_message(0, stray);
  CHECK(node.invalid_dropped() == 5);

  // Digest does not match the carried batch.
  Msg lying = make_msg(kps[0], MsgKind::Propose, 0, 0, 1, h);
  lying.batch = Batch{Tx{2, 2}};
  node.on_message(0, lying);
  CHECK(node.invalid_dropped() == 6);

  CHECK(probe.count(MsgKind::Prepare) == 0);

  // A proposal spending an already-spent input is rejected.
  node.seed_spent({5});
  Batch doubled{Tx{5, 5}};
  Msg spender = make_msg(kps[0], MsgKind::Propose, 0, 0, 1,
                         batch_digest(doubled));
  spender.batch = doubled;
  node.on_message(0, spender);
  CHECK(node.invalid_dropped() == 7);
  CHECK(probe.count(MsgKind::Prepare) == 0);

  // The well-formed version goes through.
  Batch good{Tx{1, 1}};
  Msg ok = make_msg(kps[0], MsgKind::Propose, 0, 0, 1, batch_digest(good));
  ok.batch = good;
  node.on_message(0, ok);
  CHECK(node.invalid_dropped() == 7);
  CHECK(probe.count(MsgKind::Prepare) == 1);
}

TEST_CASE("a follower flags leader equivocation and votes once") {
  auto kps = make_keys(4, "equiv");
  Probe probe;
  PbftNode node(1, kps[1].pk, kps[1].sk, pks_of(kps), 0, 1.0, probe.hooks());
  node.start();

  Batch a{Tx{1, 1}};
  Batch b{Tx{2, 2}};
  Msg p1 = make_msg(kps[0], MsgKind::Propose, 0, 0, 1, batch_digest(a));
  p1.batch = a;
  Msg p2 = make_msg(kps[0], MsgKind::Propose, 0, 0, 1, batch_digest(b));
  p2.batch = b;

  node.on_message(0, p1);
  CHECK(node.equivocations_seen() == 0);
  CHECK(probe.count(MsgKind::Prepare) == 1);
  node.on_message(0, p2);
  CHECK(node.equivocations_seen() == 1);
  CHECK(probe.count(MsgKind::Prepare) == 1);
  node.on_message(0, p2);  // every conflicting receipt is counted
  CHECK(node.equivocations_seen() == 2);
  CHECK(probe.count(MsgKind::Prepare) == 1);
}

TEST_CASE("a double-voting seat prepares conflicting proposals") {
  auto kps = make_keys(4, "dv");
  Probe probe;
  PbftNode node(1, kps[1].pk, kps[1].sk, pks_of(kps), 0, 1.0, probe.hooks());
  SeatBehavior b;
  b.double_vote = true;
  node.set_behavior(b);
  node.start();

  Batch a{Tx{1, 1}};
  Batch c{Tx{2, 2}};
  Msg p1 = make_msg(kps[0], MsgKind::Propose, 0, 0, 1, batch_digest(a));
  p1.batch = a;
  Msg p2 = make_msg(kps[0], MsgKind::Propose, 0, 0, 1, batch_digest(c));
  p2.batch = c;
  node.on_message(0, p1);
  node.on_message(0, p2);
  CHECK(node.equivocations_seen() == 1);
  CHECK(probe.count(MsgKind::Prepare) == 2);
}

TEST_CASE("a notify with a valid commit certificate commits directly") {
  auto kps = make_keys(4, "notify");
  Probe probe;
  PbftNode node(3, kps[3].pk, kps[3].sk, pks_of(kps), 0, 1.0, probe.hooks());
  node.start();

  Digest h = batch_digest(Batch{Tx{4, 4}});
  PbftHeader commit_hd{MsgKind::Commit, 0, 0, 1, h};

  Msg thin = make_msg(kps[0], MsgKind::Notify, 0, 0, 1, h);
  thin.cert = sign_quorum(kps, {0, 1}, commit_hd);
  node.on_message(0, thin);
  CHECK(node.invalid_dropped() == 1);
  CHECK(node.committed().empty());

  Msg wrong_h = make_msg(kps[0], MsgKind::Notify, 0, 0, 1,
                         batch_digest(Batch{Tx{5, 5}}));
  wrong_h.cert = sign_quorum(kps, {0, 1, 2}, commit_hd);
  node.on_message(0, wrong_h);
  CHECK(node.invalid_dropped() == 2);

  Msg wrong_kind = make_msg(kps[0], MsgKind::Notify, 0, 0, 1, h);
  wrong_kind.cert =
      sign_quorum(kps, {0, 1, 2}, PbftHeader{MsgKind::Prepare, 0, 0, 1, h});
  node.on_message(0, wrong_kind);
  CHECK(node.invalid_dropped() == 3);

  Msg wrong_view = make_msg(kps[0], MsgKind::Notify, 0, 0, 1, h);
  wrong_view.cert =
      sign_quorum(kps, {0, 1, 2}, PbftHeader{MsgKind::Commit, 0, 1, 1, h});
  node.on_message(0, wrong_view);
  CHECK(node.invalid_dropped() == 4);
  CHECK(node.committed().empty());

  Msg ok = make_msg(kps[0], MsgKind::Notify, 0, 0, 1, h);
  ok.cert = sign_quorum(kps, {0, 1, 2}, commit_hd);
  node.on_message(0, ok);
  REQUIRE(node.committed().count(1) == 1);
  CHECK(node.committed().at(1).h == h);
  CHECK(!node.committed().at(1).have_batch);
  CHECK(node.slot() == 2);
  CHECK(probe.count(MsgKind::Notify) == 1);
}

TEST_CASE("a new-view needs the right sender and a view-change quorum") {
  auto kps = make_keys(4, "nv");
  Probe probe;
  PbftNode node(3, kps[3].pk, kps[3].sk, pks_of(kps), 0, 1.0, probe.hooks());
  node.start();

  PbftHeader vc{MsgKind::ViewChange, 0, 0, 0, Digest{}};

  // Sender is not the leader of the target view.
  Msg imposter = make_msg(kps[2], MsgKind::NewView, 0, 1, 0, Digest{});
  imposter.cert = sign_quorum(kps, {0, 1, 2}, vc);
  node.on_message(2, imposter);
  CHECK(node.invalid_dropped() == 1);
  CHECK(node.view() == 0);

  // Certificate built from view-changes for the wrong view.
  Msg stale = make_msg(kps[1], MsgKind::NewView, 0, 1, 0, Digest{});
  stale.cert =
      sign_quorum(kps, {0, 1, 2}, PbftHeader{MsgKind::ViewChange, 0, 1, 0, Digest{}});
  node.on_message(1, stale);
  CHECK(node.invalid_dropped() == 2);
  CHECK(node.view() == 0);

  Msg good = make_msg(kps[1], MsgKind::NewView, 0, 1, 0, Digest{});
  good.cert = sign_quorum(kps, {0, 1, 2}, vc);
  node.on_message(1, good);
  CHECK(node.view() == 1);
  // Entering the view sends a status report to the new leader.
  REQUIRE(!probe.sent.empty());
  CHECK(probe.sent.back().first == 1);
  CHECK(probe.sent.back().second.kind == MsgKind::Status);
  auto sth = parse_status_header(probe.sent.back().second.sh.header);
  REQUIRE(sth);
  CHECK(sth->v == 1);
  CHECK(sth->last_committed == 0);
  CHECK(!sth->has_accept);
}

TEST_CASE("a fresh-value repropose is accepted and prepared") {
  auto kps = make_keys(4, "rp1");
  Probe probe;
  PbftNode node(3, kps[3].pk, kps[3].sk, pks_of(kps), 0, 1.0, probe.hooks());
  node.start();
  to_view1(node, kps);

  StatusHeader plain;
  plain.c = 0;
  plain.v = 1;
  plain.last_committed = 0;
  plain.next_slot = 1;
  Cert S{status_sh(kps[0], plain), status_sh(kps[1], plain),
         status_sh(kps[2], plain)};

  Batch nb{Tx{7, 7}};
  Msg rp = make_msg(kps[1], MsgKind::Repropose, 0, 1, 1, batch_digest(nb));
  rp.batch = nb;
  rp.cert = S;
  node.on_message(1, rp);
  CHECK(node.invalid_dropped() == 0);
  REQUIRE(probe.count(MsgKind::Prepare) == 1);
  auto hd = parse_pbft_header(probe.last(MsgKind::Prepare)->sh.header);
  REQUIRE(hd);
  CHECK(hd->v == 1);
  CHECK(hd->s == 1);
  CHECK(hd->h == batch_digest(nb));
}

TEST_CASE("a repropose must target the highest committed slot reported") {
  auto kps = make_keys(4, "rp2");
  Probe probe;
  PbftNode node(3, kps[3].pk, kps[3].sk, pks_of(kps), 0, 1.0, probe.hooks());
  node.start();
  to_view1(node, kps);
  uint64_t base = node.invalid_dropped();

  StatusHeader plain;
  plain.c = 0;
  plain.v = 1;
  plain.last_committed = 0;
  plain.next_slot = 1;
  Cert S{status_sh(kps[0], plain), status_sh(kps[1], plain),
         status_sh(kps[2], plain)};

  Batch nb{Tx{7, 7}};
  // Claims slot 2 while every status reports nothing committed.
  Msg rp = make_msg(kps[1], MsgKind::Repropose, 0, 1, 2, batch_digest(nb));
  rp.batch = nb;
  rp.cert = S;
  node.on_message(1, rp);
  CHECK(node.invalid_dropped() == base + 1);
  CHECK(probe.count(MsgKind::Prepare) == 0);

  // Duplicate signers cannot stand in for a quorum.
  Cert dupS{status_sh(kps[0], plain), status_sh(kps[0], plain),
            status_sh(kps[1], plain)};
  Msg rp2 = make_msg(kps[1], MsgKind::Repropose, 0, 1, 1, batch_digest(nb));
  rp2.batch = nb;
  rp2.cert = dupS;
  node.on_message(1, rp2);
  CHECK(node.invalid_dropped() == base + 2);
  CHECK(probe.count(MsgKind::Prepare) == 0);
}

TEST_CASE("a repropose claiming a committed slot needs its certificate") {
  auto kps = make_keys(4, "rp3");
  auto comm = pks_of(kps);
  Digest h1 = batch_digest(Batch{Tx{3, 3}});

  StatusHeader caught;
  caught.c = 0;
  caught.v = 1;
  caught.last_committed = 1;
  caught.h_committed = h1;
  caught.next_slot = 2;
  Cert S{status_sh(kps[0], caught), status_sh(kps[1], caught),
         status_sh(kps[2], caught)};
  Batch nb{Tx{8, 8}};

  auto attempt = [&](Cert q_star, uint64_t& dropped_out,
                     Probe& probe) -> PbftNode {
    PbftNode node(3, kps[3].pk, kps[3].sk, comm, 0, 1.0, probe.hooks());
    node.start();
    to_view1(node, kps);
    uint64_t base = node.invalid_dropped();
    Msg rp = make_msg(kps[1], MsgKind::Repropose, 0, 1, 2, batch_digest(nb));
    rp.batch = nb;
    rp.cert = S;
    rp.cert2 = std::move(q_star);
    node.on_message(1, rp);
    dropped_out = node.invalid_dropped() - base;
    return node;
  };

  uint64_t dropped = 0;
  {
    Probe probe;
    PbftNode node = attempt({}, dropped, probe);
    CHECK(dropped == 1);  // missing Q*
    CHECK(node.committed().empty());
  }
  {
    Probe probe;
    Cert weak = sign_quorum(kps, {0, 1}, PbftHeader{MsgKind::Commit, 0, 0, 1, h1});
    PbftNode node = attempt(std::move(weak), dropped, probe);
    CHECK(dropped == 1);
    CHECK(node.committed().empty());
  }
  {
    Probe probe;
    Cert q = sign_quorum(kps, {0, 1, 2}, PbftHeader{MsgKind::Commit, 0, 0, 1, h1});
    PbftNode node = attempt(std::move(q), dropped, probe);
    CHECK(dropped == 0);
    // The certificate itself commits slot 1; the value for slot 2 is prepared.
    REQUIRE(node.committed().count(1) == 1);
    CHECK(node.committed().at(1).h == h1);
    REQUIRE(probe.count(MsgKind::Prepare) == 1);
    auto hd = parse_pbft_header(probe.last(MsgKind::Prepare)->sh.header);
    CHECK(hd->s == 2);
    CHECK(hd->h == batch_digest(nb));
  }
}

TEST_CASE("a repropose must adopt the highest-ranked accepted value") {
  auto kps = make_keys(4, "rp4");
  auto comm = pks_of(kps);
  Digest h_a = batch_digest(Batch{Tx{11, 11}});
  Digest h_b = batch_digest(Batch{Tx{12, 12}});

  StatusHeader plain;
  plain.c = 0;
  plain.v = 1;
  plain.last_committed = 0;
  plain.next_slot = 1;
  StatusHeader accepted = plain;
  accepted.has_accept = true;
  accepted.h_accepted = h_a;
  accepted.rank = 0;
  Cert S{status_sh(kps[0], accepted), status_sh(kps[1], plain),
         status_sh(kps[2], plain)};
  Cert a_star =
      sign_quorum(kps, {0, 1, 2}, PbftHeader{MsgKind::Prepare, 0, 0, 1, h_a});

  auto attempt = [&](const Digest& h_prime, Cert a, uint64_t& dropped_out,
                     Probe& probe) {
    PbftNode node(3, kps[3].pk, kps[3].sk, comm, 0, 1.0, probe.hooks());
    node.start();
    to_view1(node, kps);
    uint64_t base = node.invalid_dropped();
    Msg rp = make_msg(kps[1], MsgKind::Repropose, 0, 1, 1, h_prime);
    rp.cert = S;
    rp.cert3 = std::move(a);
    node.on_message(1, rp);
    dropped_out = node.invalid_dropped() - base;
  };

  uint64_t dropped = 0;
  {
    Probe probe;  // leader tries to substitute its own value over A*
    attempt(h_b, a_star, dropped, probe);
    CHECK(dropped == 1);
    CHECK(probe.count(MsgKind::Prepare) == 0);
  }
  {
    Probe probe;  // A* omitted although a status claims an accept
    attempt(h_a, {}, dropped, probe);
    CHECK(dropped == 1);
  }
  {
    Probe probe;  // A* rank disagrees with the claimed rank
    Cert wrong_rank = sign_quorum(
        kps, {0, 1, 2}, PbftHeader{MsgKind::Prepare, 0, 1, 1, h_a});
    attempt(h_a, std::move(wrong_rank), dropped, probe);
    CHECK(dropped == 1);
  }
  {
    Probe probe;  // carrying the accepted value verbatim is accepted
    attempt(h_a, a_star, dropped, probe);
    CHECK(dropped == 0);
    REQUIRE(probe.count(MsgKind::Prepare) == 1);
    auto hd = parse_pbft_header(probe.last(MsgKind::Prepare)->sh.header);
    CHECK(hd->h == h_a);
    CHECK(hd->s == 1);
  }
}

namespace {

// Scheduler-driven committee with adversary-controlled delays in [0, delta].
struct Cluster {
  uint64_t n;
  double delta = 1.0;
  Scheduler sched;
  std::vector<KeyPair> kps;
  std::vector<Bytes> committee;
  std::vector<std::unique_ptr<PbftNode>> nodes;
  std::vector<bool> byz;
  Xoshiro256ss net_rng;
  bool random_delay = false;
  uint64_t batch_size = 4;
  uint64_t next_tx = 1;
  std::set<uint64_t> pending, spent;
  std::map<uint64_t, Digest> first;
  bool conflict = false;

  Cluster(uint64_t n_, const std::map<int, SeatBehavior>& byzs, uint64_t seed)
      : n(n_), net_rng(Xoshiro256ss::from_seed(seed)) {
    byz.assign(n, false);
    for (auto& [s, b] : byzs) byz[s] = true;
    for (uint64_t i = 0; i < n; i++) {
      kps.push_back(keygen(sha256(to_bytes("cluster" + std::to_string(seed) +
                                           "-" + std::to_string(i)))));
      committee.push_back(kps.back().pk);
    }
    for (uint64_t i = 0; i < n; i++) {
      PbftNode::Hooks h;
      h.send = [this, i](int to, const Msg& m) { deliver(int(i), to, m); };
      h.broadcast = [this, i](const Msg& m) {
        for (uint64_t j = 0; j < n; j++) deliver(int(i), int(j), m);
      };
      h.now = [this] { return sched.now(); };
      h.defer = [this](SimTime d, std::function<void()> fn) {
        sched.schedule(sched.now() + d, std::move(fn));
      };
      h.verify = [](const Bytes& pk, const Bytes& msg, const Bytes& sig) {
        return verify(pk, msg, sig);
      };
      h.pick_batch = [this] {
        Batch b;
        for (uint64_t id : pending) {
          if (spent.count(id)) continue;
          b.push_back(Tx{id, id});
          if (b.size() == batch_size) break;
        }
        return b;
      };
      h.on_commit = [this](PbftNode& node, uint64_t s,
                           const CommitRecord& rec) {
        if (byz[node.seat()]) return;
        auto it = first.find(s);
        if (it == first.end()) first[s] = rec.h;
        else if (it->second != rec.h) conflict = true;
        if (rec.have_batch) {
          for (const Tx& tx : rec.batch) {
            spent.insert(tx.input);
            pending.erase(tx.id);
          }
        }
      };
      nodes.push_back(std::make_unique<PbftNode>(int(i), kps[i].pk, kps[i].sk,
                                                 committee, 0, delta,
                                                 std::move(h)));
      auto bit = byzs.find(int(i));
      if (bit != byzs.end()) nodes.back()->set_behavior(bit->second);
    }
  }

  void deliver(int from, int to, const Msg& m) {
    double d = from == to ? 0.0
               : random_delay ? net_rng.uniform(0, delta)
                              : 0.05;
    sched.schedule(sched.now() + d,
                   [this, from, to, m] { nodes[to]->on_message(from, m); });
  }

  void inject(uint64_t count) {
    for (uint64_t i = 0; i < count; i++) pending.insert(next_tx++);
  }

  bool honest_idle() const {
    for (uint64_t i = 0; i < n; i++) {
      if (!byz[i] && !nodes[i]->idle()) return false;
    }
    return true;
  }

  void run(uint64_t budget, double cap) {
    for (auto& nd : nodes) nd->set_max_slot(budget);
    for (auto& nd : nodes) nd->start();
    while (!sched.empty() && !honest_idle() && sched.next_time() <= cap) {
      sched.run_until(sched.next_time());
    }
  }
};

}  // namespace

TEST_CASE("an honest committee commits every budgeted slot in view zero") {
  Cluster cl(4, {}, 1);
  cl.inject(12);
  cl.run(3, 100.0);
  CHECK(cl.honest_idle());
  CHECK(!cl.conflict);
  CHECK(cl.pending.empty());
  CHECK(cl.spent.size() == 12);
  std::set<uint64_t> inputs;
  for (uint64_t i = 0; i < cl.n; i++) {
    const auto& com = cl.nodes[i]->committed();
    REQUIRE(com.size() == 3);
    CHECK(cl.nodes[i]->view() == 0);
    CHECK(cl.nodes[i]->view_changes_sent() == 0);
    CHECK(cl.nodes[i]->safety_conflicts() == 0);
    for (uint64_t s = 1; s <= 3; s++) {
      REQUIRE(com.count(s) == 1);
      CHECK(com.at(s).h == cl.nodes[0]->committed().at(s).h);
      if (i == 0) {
        REQUIRE(com.at(s).have_batch);
        for (const Tx& tx : com.at(s).batch) {
          CHECK(inputs.insert(tx.input).second);
        }
      }
    }
  }
  CHECK(inputs.size() == 12);
}

TEST_CASE("a silent leader is replaced and the committee still progresses") {
  SeatBehavior silent;
  silent.silent_leader = true;
  Cluster cl(4, {{0, silent}}, 2);
  cl.inject(8);
  cl.run(2, 200.0);
  CHECK(cl.honest_idle());
  CHECK(!cl.conflict);
  for (uint64_t i = 1; i < cl.n; i++) {
    REQUIRE(cl.nodes[i]->committed().count(1) == 1);
    REQUIRE(cl.nodes[i]->committed().count(2) == 1);
    CHECK(cl.nodes[i]->view() >= 1);
    CHECK(cl.nodes[i]->view_changes_sent() >= 1);
    CHECK(cl.nodes[i]->committed().at(1).view >= 1);
    CHECK(cl.nodes[i]->safety_conflicts() == 0);
  }
}

TEST_CASE("an equivocating leader cannot split the committee") {
  SeatBehavior equiv;
  equiv.equivocate_leader = true;
  Cluster cl(4, {{0, equiv}}, 3);
  cl.inject(8);
  cl.run(2, 200.0);
  CHECK(cl.honest_idle());
  CHECK(!cl.conflict);
  for (uint64_t i = 1; i < cl.n; i++) {
    REQUIRE(cl.nodes[i]->committed().count(1) == 1);
    REQUIRE(cl.nodes[i]->committed().count(2) == 1);
    CHECK(cl.nodes[i]->committed().at(1).h ==
          cl.nodes[1]->committed().at(1).h);
    CHECK(cl.nodes[i]->safety_conflicts() == 0);
  }
}

TEST_CASE("a vote-withholding minority cannot stall a quorum") {
  SeatBehavior mute;
  mute.withhold_votes = true;
  Cluster cl(4, {{2, mute}}, 4);
  cl.inject(8);
  cl.run(2, 100.0);
  CHECK(cl.honest_idle());
  CHECK(!cl.conflict);
  for (uint64_t i = 0; i < cl.n; i++) {
    if (cl.byz[i]) continue;
    REQUIRE(cl.nodes[i]->committed().count(2) == 1);
    CHECK(cl.nodes[i]->view() == 0);
    CHECK(cl.nodes[i]->view_changes_sent() == 0);
  }
}

TEST_CASE("safety and liveness hold under randomized faults and delays") {
  Xoshiro256ss rng = Xoshiro256ss::from_seed(2026);
  for (uint64_t trial = 0; trial < 24; trial++) {
    uint64_t n = trial % 2 == 0 ? 4 : 7;
    uint64_t f = pbft_f(n);
    uint64_t nbyz = rng.below(f + 1);
    std::map<int, SeatBehavior> byzs;
    while (byzs.size() < nbyz) {
      SeatBehavior b;
      switch (rng.below(4)) {
        case 0: b.silent_leader = true; break;
        case 1: b.equivocate_leader = true; break;
        case 2: b.withhold_votes = true; break;
        default: b.double_vote = true; break;
      }
      byzs[int(rng.below(n))] = b;
    }
    Cluster cl(n, byzs, 1000 + trial);
    cl.random_delay = true;
    cl.inject(3 * cl.batch_size);
    cl.run(3, 400.0);

    CAPTURE(trial);
    CHECK(cl.honest_idle());
    CHECK(!cl.conflict);
    for (uint64_t i = 0; i < n; i++) {
      if (cl.byz[i]) continue;
      CHECK(cl.nodes[i]->safety_conflicts() == 0);
      for (uint64_t s = 1; s <= 3; s++) {
        REQUIRE(cl.nodes[i]->committed().count(s) == 1);
        CHECK(cl.nodes[i]->committed().at(s).h == cl.first.at(s));
      }
    }
  }
}

TEST_CASE("agreement decision rules") {
  CHECK(ba_num_phases(0) == 1);
  CHECK(ba_num_phases(2) == 3);
  CHECK(ba_king_seat(1, 4) == 0);
  CHECK(ba_king_seat(4, 4) == 3);
  CHECK(ba_king_seat(5, 4) == 0);

  CHECK(ba_decide_d(7, 2, 5, 0) == 0);
  CHECK(ba_decide_d(7, 2, 0, 5) == 1);
  CHECK(ba_decide_d(7, 2, 4, 3) == 2);
  CHECK(ba_decide_d(4, 1, 3, 1) == 0);

  BaPre p = ba_decide_pre(7, 2, 5, 0);
  CHECK(p.pre == 0);
  CHECK(p.strong);
  p = ba_decide_pre(7, 2, 3, 4);
  CHECK(p.pre == 1);
  CHECK(!p.strong);
  p = ba_decide_pre(7, 2, 2, 2);
  CHECK(p.pre == 0);
  CHECK(!p.strong);

  CHECK(ba_next_bit(BaPre{1, true}, 0) == 1);
  CHECK(ba_next_bit(BaPre{0, true}, 1) == 0);
  CHECK(ba_next_bit(BaPre{1, false}, 0) == 0);
  CHECK(ba_next_bit(BaPre{0, false}, 1) == 1);
  CHECK(ba_next_bit(BaPre{0, false}, 2) == 0);
  CHECK(ba_next_bit(BaPre{0, false}, -1) == 0);
}

TEST_CASE("binary agreement validity with unanimous honest input") {
  for (uint64_t n : {4ull, 7ull}) {
    uint64_t f = pbft_f(n);
    for (int b : {0, 1}) {
      std::vector<int> init(n, b);
      std::vector<bool> byz(n, false);
      BaSyncResult res = ba_run_sync(n, f, init, byz, {});
      CHECK(res.agreement);
      CHECK(res.decided == b);
    }
  }
}

TEST_CASE("binary agreement holds against randomized saboteurs") {
  Xoshiro256ss rng = Xoshiro256ss::from_seed(424242);
  for (uint64_t t = 0; t < 1000; t++) {
    uint64_t n = t % 2 == 0 ? 4 : 7;
    uint64_t f = pbft_f(n);
    std::vector<bool> byz(n, false);
    uint64_t nbyz = rng.below(f + 1);
    uint64_t placed = 0;
    while (placed < nbyz) {
      uint64_t s = rng.below(n);
      if (!byz[s]) {
        byz[s] = true;
        placed++;
      }
    }
    std::vector<int> init(n);
    for (auto& b : init) b = int(rng.below(2));
    uint64_t salt = rng.next();
    BaByzFn fn = [salt](int seat, uint64_t phase, int round, int to) {
      uint64_t h = salt ^ (uint64_t(seat) << 48) ^ (phase << 32) ^
                   (uint64_t(round) << 16) ^ uint64_t(to);
      return int(splitmix64(h) % 4) - 1;
    };
    BaSyncResult res = ba_run_sync(n, f, init, byz, fn);
    CAPTURE(t);
    CHECK(res.agreement);
    CHECK((res.decided == 0 || res.decided == 1));
    int b0 = -1;
    bool unanimous = true;
    for (uint64_t i = 0; i < n; i++) {
      if (byz[i]) continue;
      if (b0 < 0) b0 = init[i];
      else if (init[i] != b0) unanimous = false;
    }
    if (unanimous && b0 >= 0) CHECK(res.decided == b0);
  }
}
