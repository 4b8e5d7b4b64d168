#include "qpop/pbft.hpp"

#include <algorithm>

#include "qpop/sig.hpp"

namespace qpop {

namespace {
const Digest kZeroDigest{};
}

PbftNode::PbftNode(int seat, Bytes pk, Bytes sk, std::vector<Bytes> committee,
                   uint64_t c, double delta, Hooks hooks)
    : seat_(seat),
      pk_(std::move(pk)),
      sk_(std::move(sk)),
      committee_(std::move(committee)),
      n_(committee_.size()),
      f_(pbft_f(committee_.size())),
      c_(c),
      delta_(delta),
      hooks_(std::move(hooks)) {}

bool PbftNode::is_member(const Bytes& pk) const {
  return std::find(committee_.begin(), committee_.end(), pk) !=
         committee_.end();
}

bool PbftNode::batch_valid(const Batch& b) const {
  std::set<uint64_t> inputs;
  for (const Tx& tx : b) {
    if (spent_.count(tx.input)) return false;
    if (!inputs.insert(tx.input).second) return false;
  }
  return true;
}

Msg PbftNode::make_signed(MsgKind kind, uint64_t s, const Digest& h) const {
  Msg m;
  m.kind = kind;
  PbftHeader hd{kind, c_, v_, s, h};
  m.sh.header = encode_pbft_header(hd);
  m.sh.pk = pk_;
  m.sh.sig = sign(sk_, m.sh.header);
  return m;
}

void PbftNode::log_send(const Msg& m, int to) const {
  if (!hooks_.log) return;
  hooks_.log(msg_kind_name(m.kind), msg_digest(m),
             Json{{"to", to < 0 ? Json("*") : Json(to)}});
}

void PbftNode::start() {
  if (slot_ > max_slot_) return;
  arm_timer(TimerKind::Steady, 4 * delta_, slot_);
  propose_if_leader();
}

void PbftNode::kick() {
  if (abandoned_ || slot_ > max_slot_) return;
  if (armed_ == TimerKind::None) arm_timer(TimerKind::Steady, 4 * delta_, slot_);
  propose_if_leader();
}

void PbftNode::arm_timer(TimerKind kind, double delay, uint64_t aux) {
  armed_ = kind;
  uint64_t gen = ++timer_gen_;
  hooks_.defer(delay, [this, gen, kind, aux] {
    if (gen != timer_gen_) return;
    armed_ = TimerKind::None;
    on_timer(kind, aux);
  });
}

void PbftNode::disarm_timer() {
  armed_ = TimerKind::None;
  ++timer_gen_;
}

void PbftNode::on_timer(TimerKind kind, uint64_t aux) {
  switch (kind) {
    case TimerKind::Steady: {
      if (slot_ != aux || committed_.count(aux)) return;
      // 4D passed without committing the slot: abandon the leader.
      abandoned_ = true;
      view_changes_sent_++;
      Msg m = make_signed(MsgKind::ViewChange, 0, kZeroDigest);
      log_send(m, -1);
      hooks_.broadcast(m);
      break;
    }
    case TimerKind::AwaitNewView: {
      if (v_ >= aux) return;
      // No new-view from the next leader within 2D: skip past it.
      abandoned_ = true;
      view_changes_sent_++;
      Msg m;
      m.kind = MsgKind::ViewChange;
      PbftHeader hd{MsgKind::ViewChange, c_, aux, 0, kZeroDigest};
      m.sh.header = encode_pbft_header(hd);
      m.sh.pk = pk_;
      m.sh.sig = sign(sk_, m.sh.header);
      log_send(m, -1);
      hooks_.broadcast(m);
      break;
    }
    case TimerKind::PostNewView: {
      if (v_ != aux || commits_since_entry_ > 0) return;
      abandoned_ = true;
      view_changes_sent_++;
      Msg m = make_signed(MsgKind::ViewChange, 0, kZeroDigest);
      log_send(m, -1);
      hooks_.broadcast(m);
      break;
    }
    case TimerKind::None:
      break;
  }
}

void PbftNode::on_message(int from, const Msg& m) {
  if (m.kind == MsgKind::ViewChangeBundle) {
    handle_vc_bundle(from, m);
    return;
  }
  if (m.sh.pk.empty() || !is_member(m.sh.pk) ||
      !hooks_.verify(m.sh.pk, m.sh.header, m.sh.sig)) {
    invalid_dropped_++;
    return;
  }
  if (m.kind == MsgKind::Status) {
    auto sth = parse_status_header(m.sh.header);
    if (!sth || sth->c != c_) {
      invalid_dropped_++;
      return;
    }
    if (sth->v > v_) {
      future_[sth->v].emplace_back(from, m);
      return;
    }
    if (sth->v < v_) return;
    handle_status(from, m);
    return;
  }
  auto hd = parse_pbft_header(m.sh.header);
  if (!hd || hd->kind != m.kind || hd->c != c_) {
    invalid_dropped_++;
    return;
  }
  switch (m.kind) {
    case MsgKind::Propose:
    case MsgKind::Prepare:
    case MsgKind::Commit:
    case MsgKind::Repropose:
      if (hd->v > v_) {
        future_[hd->v].emplace_back(from, m);
        return;
      }
      if (hd->v < v_) return;
      break;
    default:
      break;
  }
  switch (m.kind) {
    case MsgKind::Propose: handle_propose(from, m, *hd); break;
    case MsgKind::Prepare: handle_prepare(from, m, *hd); break;
    case MsgKind::Commit: handle_commit(from, m, *hd); break;
    case MsgKind::Notify: handle_notify(from, m, *hd); break;
    case MsgKind::ViewChange: handle_view_change(from, m, *hd); break;
    case MsgKind::NewView: handle_new_view(from, m, *hd); break;
    case MsgKind::Repropose: handle_repropose(from, m, *hd); break;
    default: break;
  }
}

void PbftNode::propose_if_leader() {
  if (leader_of(committee_, v_) != pk_ || abandoned_) return;
  uint64_t s = slot_;
  if (s > max_slot_ || committed_.count(s)) return;
  if (proposals_.count({v_, s})) return;
  if (behavior_.silent_leader) return;

  Batch batch = hooks_.pick_batch ? hooks_.pick_batch() : Batch{};
  if (behavior_.equivocate_leader) {
    // Conflicting proposals to disjoint halves of the committee.
    Batch other = batch;
    Enc seed;
    seed.str("equivocation").u64(c_).u64(v_).u64(s);
    Digest d = sha256(seed);
    other.push_back(Tx{digest_u64(d), (1ULL << 62) + digest_u64(d) % (1ULL << 32)});
    Msg m1 = make_signed(MsgKind::Propose, s, batch_digest(batch));
    m1.batch = batch;
    Msg m2 = make_signed(MsgKind::Propose, s, batch_digest(other));
    m2.batch = other;
    for (uint64_t i = 0; i < n_; i++) {
      const Msg& m = i < n_ / 2 ? m1 : m2;
      log_send(m, int(i));
      hooks_.send(int(i), m);
    }
    return;
  }
  Msg m = make_signed(MsgKind::Propose, s, batch_digest(batch));
  m.batch = batch;
  log_send(m, -1);
  hooks_.broadcast(m);
}

void PbftNode::handle_propose(int from, const Msg& m, const PbftHeader& hd) {
  (void)from;
  if (m.sh.pk != leader_of(committee_, hd.v)) {
    invalid_dropped_++;
    return;
  }
  if (abandoned_ || committed_.count(hd.s)) return;
  auto key = std::make_pair(hd.v, hd.s);
  auto it = proposals_.find(key);
  if (it != proposals_.end() && it->second.have) {
    if (it->second.h == hd.h) return;
    // Same leader, same slot, different value.
    equivocations_seen_++;
    if (hooks_.log) {
      hooks_.log("equivocation", hd.h, Json{{"v", hd.v}, {"s", hd.s}});
    }
    if (!behavior_.double_vote) return;
  }
  if (batch_digest(m.batch) != hd.h || !batch_valid(m.batch)) {
    invalid_dropped_++;
    return;
  }
  if (it == proposals_.end()) {
    proposals_[key] = Proposal{true, hd.h, true, m.batch};
  }
  batch_cache_[hex(hd.h)] = m.batch;
  if (!behavior_.withhold_votes) {
    if (behavior_.double_vote || !prepare_sent_.count(key)) {
      send_prepare(hd.s, hd.h);
    }
  }
}

void PbftNode::send_prepare(uint64_t s, const Digest& h) {
  prepare_sent_.insert({v_, s});
  Msg m = make_signed(MsgKind::Prepare, s, h);
  log_send(m, -1);
  hooks_.broadcast(m);
}

void PbftNode::handle_prepare(int from, const Msg& m, const PbftHeader& hd) {
  (void)from;
  if (committed_.count(hd.s)) return;
  prepares_[{hd.v, hd.s, hex(hd.h)}][hex(m.sh.pk)] = m.sh;
  check_prepare_quorum(hd.v, hd.s, hd.h);
}

void PbftNode::check_prepare_quorum(uint64_t v, uint64_t s, const Digest& h) {
  auto& tally = prepares_[{v, s, hex(h)}];
  if (tally.size() < 2 * f_ + 1) return;
  auto& a = accepted_[s];
  if (a.have && a.view >= v) return;
  a.have = true;
  a.view = v;
  a.h = h;
  a.cert.clear();
  for (auto& [pk, sh] : tally) {
    if (a.cert.size() == 2 * f_ + 1) break;
    a.cert.push_back(sh);
  }
  if (hooks_.log) hooks_.log("accept", h, Json{{"v", v}, {"s", s}});
  if (!behavior_.withhold_votes && !commit_vote_sent_.count({v, s})) {
    commit_vote_sent_.insert({v, s});
    Msg m = make_signed(MsgKind::Commit, s, h);
    log_send(m, -1);
    hooks_.broadcast(m);
  }
}

void PbftNode::handle_commit(int from, const Msg& m, const PbftHeader& hd) {
  (void)from;
  if (committed_.count(hd.s)) return;
  commits_[{hd.v, hd.s, hex(hd.h)}][hex(m.sh.pk)] = m.sh;
  check_commit_quorum(hd.v, hd.s, hd.h);
}

void PbftNode::check_commit_quorum(uint64_t v, uint64_t s, const Digest& h) {
  auto& tally = commits_[{v, s, hex(h)}];
  if (tally.size() < 2 * f_ + 1) return;
  Cert q;
  for (auto& [pk, sh] : tally) {
    if (q.size() == 2 * f_ + 1) break;
    q.push_back(sh);
  }
  do_commit(s, h, v, q);
}

void PbftNode::do_commit(uint64_t s, const Digest& h, uint64_t view,
                         const Cert& q) {
  auto it = committed_.find(s);
  if (it != committed_.end()) {
    if (it->second.h != h) {
      safety_conflicts_++;
      if (hooks_.log) {
        hooks_.log("safety_conflict", h,
                   Json{{"s", s}, {"committed", hex(it->second.h)}});
      }
    }
    return;
  }
  CommitRecord rec;
  rec.h = h;
  rec.q = q;
  rec.view = view;
  rec.at = hooks_.now ? hooks_.now() : 0;
  auto bit = batch_cache_.find(hex(h));
  if (bit != batch_cache_.end()) {
    rec.have_batch = true;
    rec.batch = bit->second;
    for (const Tx& tx : rec.batch) spent_.insert(tx.input);
  }
  committed_[s] = rec;
  if (hooks_.log) {
    hooks_.log("commit", h, Json{{"s", s}, {"view", view}});
  }
  if (hooks_.on_commit) hooks_.on_commit(*this, s, committed_[s]);

  if (!notified_.count(s)) {
    notified_.insert(s);
    Msg m;
    m.kind = MsgKind::Notify;
    PbftHeader hd{MsgKind::Notify, c_, view, s, h};
    m.sh.header = encode_pbft_header(hd);
    m.sh.pk = pk_;
    m.sh.sig = sign(sk_, m.sh.header);
    m.cert = q;
    log_send(m, -1);
    hooks_.broadcast(m);
  }
  advance_slot();
}

void PbftNode::advance_slot() {
  uint64_t old = slot_;
  while (committed_.count(slot_)) slot_++;
  if (slot_ == old) return;
  abandoned_ = false;
  commits_since_entry_++;
  if (slot_ <= max_slot_) {
    arm_timer(TimerKind::Steady, 4 * delta_, slot_);
    propose_if_leader();
  } else {
    disarm_timer();
  }
}

void PbftNode::handle_notify(int from, const Msg& m, const PbftHeader& hd) {
  (void)from;
  auto q = validate_quorum_cert(m.cert, MsgKind::Commit, c_, hd.s, committee_,
                                2 * f_ + 1, hooks_.verify);
  if (!q || q->h != hd.h || q->v != hd.v) {
    invalid_dropped_++;
    return;
  }
  do_commit(hd.s, hd.h, hd.v, m.cert);
}

void PbftNode::handle_view_change(int from, const Msg& m,
                                  const PbftHeader& hd) {
  (void)from;
  viewchanges_[hd.v][hex(m.sh.pk)] = m.sh;
  maybe_act_on_vc_quorum(hd.v);
}

void PbftNode::handle_vc_bundle(int from, const Msg& m) {
  (void)from;
  if (m.cert.size() < 2 * f_ + 1) return;
  auto hd = parse_pbft_header(m.cert[0].header);
  if (!hd || hd->kind != MsgKind::ViewChange || hd->c != c_) return;
  if (!validate_matching_cert(m.cert, m.cert[0].header, committee_, 2 * f_ + 1,
                              hooks_.verify)) {
    invalid_dropped_++;
    return;
  }
  auto& tally = viewchanges_[hd->v];
  for (const auto& sh : m.cert) tally[hex(sh.pk)] = sh;
  maybe_act_on_vc_quorum(hd->v);
}

void PbftNode::maybe_act_on_vc_quorum(uint64_t target_v) {
  auto& tally = viewchanges_[target_v];
  if (tally.size() < 2 * f_ + 1 || v_ > target_v) return;

  Cert bundle;
  for (auto& [pk, sh] : tally) {
    if (bundle.size() == 2 * f_ + 1) break;
    bundle.push_back(sh);
  }
  int next_leader_seat = int((target_v + 1) % n_);

  if (!vc_forwarded_.count(target_v)) {
    vc_forwarded_.insert(target_v);
    Msg m;
    m.kind = MsgKind::ViewChangeBundle;
    m.cert = bundle;
    log_send(m, next_leader_seat);
    hooks_.send(next_leader_seat, m);
    arm_timer(TimerKind::AwaitNewView, 2 * delta_, target_v + 1);
  }

  if (leader_of(committee_, target_v + 1) == pk_ && v_ <= target_v) {
    if (behavior_.silent_leader) return;
    Msg m;
    m.kind = MsgKind::NewView;
    PbftHeader hd{MsgKind::NewView, c_, target_v + 1, 0, kZeroDigest};
    m.sh.header = encode_pbft_header(hd);
    m.sh.pk = pk_;
    m.sh.sig = sign(sk_, m.sh.header);
    m.cert = bundle;
    log_send(m, -1);
    hooks_.broadcast(m);
    enter_view(target_v + 1);
  }
}

void PbftNode::handle_new_view(int from, const Msg& m, const PbftHeader& hd) {
  (void)from;
  if (m.sh.pk != leader_of(committee_, hd.v)) {
    invalid_dropped_++;
    return;
  }
  if (hd.v <= v_) return;
  PbftHeader vc{MsgKind::ViewChange, c_, hd.v - 1, 0, kZeroDigest};
  if (!validate_matching_cert(m.cert, encode_pbft_header(vc), committee_,
                              2 * f_ + 1, hooks_.verify)) {
    invalid_dropped_++;
    return;
  }
  enter_view(hd.v);
}

void PbftNode::enter_view(uint64_t v_new) {
  v_ = v_new;
  abandoned_ = false;
  commits_since_entry_ = 0;
  if (hooks_.log) hooks_.log("enter_view", kZeroDigest, Json{{"v", v_new}});
  send_status();
  arm_timer(TimerKind::PostNewView, 8 * delta_, v_new);

  // Replay messages buffered for views up to the one just entered.
  std::vector<std::pair<int, Msg>> replay;
  for (auto it = future_.begin(); it != future_.end();) {
    if (it->first <= v_new) {
      for (auto& e : it->second) replay.push_back(std::move(e));
      it = future_.erase(it);
    } else {
      ++it;
    }
  }
  for (auto& [from, msg] : replay) on_message(from, msg);
}

void PbftNode::send_status() {
  StatusHeader sth;
  sth.c = c_;
  sth.v = v_;
  sth.last_committed = slot_ - 1;
  sth.h_committed = slot_ > 1 ? committed_.at(slot_ - 1).h : kZeroDigest;
  sth.next_slot = slot_;
  auto ait = accepted_.find(slot_);
  Cert a;
  if (ait != accepted_.end() && ait->second.have) {
    sth.has_accept = true;
    sth.h_accepted = ait->second.h;
    sth.rank = ait->second.view;
    a = ait->second.cert;
  }
  Msg m;
  m.kind = MsgKind::Status;
  m.sh.header = encode_status_header(sth);
  m.sh.pk = pk_;
  m.sh.sig = sign(sk_, m.sh.header);
  if (slot_ > 1) m.cert = committed_.at(slot_ - 1).q;
  m.cert3 = a;
  int leader_seat = int(v_ % n_);
  log_send(m, leader_seat);
  hooks_.send(leader_seat, m);
}

bool PbftNode::validate_status_msg(const Msg& m, StatusHeader& out) const {
  auto sth = parse_status_header(m.sh.header);
  if (!sth || sth->c != c_ || sth->next_slot != sth->last_committed + 1) {
    return false;
  }
  if (sth->last_committed >= 1) {
    auto q = validate_quorum_cert(m.cert, MsgKind::Commit, c_,
                                  sth->last_committed, committee_, 2 * f_ + 1,
                                  hooks_.verify);
    if (!q || q->h != sth->h_committed) return false;
  } else if (!m.cert.empty() || sth->h_committed != kZeroDigest) {
    return false;
  }
  if (sth->has_accept) {
    if (sth->rank == RANK_NONE) return false;
    auto a = validate_quorum_cert(m.cert3, MsgKind::Prepare, c_,
                                  sth->next_slot, committee_, 2 * f_ + 1,
                                  hooks_.verify);
    if (!a || a->h != sth->h_accepted || a->v != sth->rank) return false;
  } else if (!m.cert3.empty() || sth->rank != RANK_NONE) {
    return false;
  }
  out = *sth;
  return true;
}

void PbftNode::handle_status(int from, const Msg& m) {
  if (leader_of(committee_, v_) != pk_) return;
  StatusHeader sth;
  if (!validate_status_msg(m, sth)) {
    invalid_dropped_++;
    return;
  }
  (void)from;
  statuses_[v_][hex(m.sh.pk)] = m;
  if (statuses_[v_].size() >= 2 * f_ + 1 && !reproposed_.count(v_)) {
    try_repropose();
  }
}

void PbftNode::try_repropose() {
  if (behavior_.silent_leader) return;
  reproposed_.insert(v_);
  auto& coll = statuses_[v_];

  std::vector<const Msg*> chosen;
  for (auto& [pk, msg] : coll) {
    if (chosen.size() == 2 * f_ + 1) break;
    chosen.push_back(&msg);
  }
  const Msg* best = nullptr;
  StatusHeader best_h;
  auto ord = [](const StatusHeader& s) {
    return std::make_pair(s.last_committed, s.has_accept ? s.rank + 1 : 0);
  };
  for (const Msg* cand : chosen) {
    StatusHeader h = *parse_status_header(cand->sh.header);
    if (!best || ord(h) > ord(best_h)) {
      best = cand;
      best_h = h;
    }
  }
  uint64_t s_star = best_h.last_committed;

  Msg m;
  m.kind = MsgKind::Repropose;
  Digest h_prime;
  if (best_h.has_accept) {
    h_prime = best_h.h_accepted;
    auto bit = batch_cache_.find(hex(h_prime));
    if (bit != batch_cache_.end()) m.batch = bit->second;
  } else {
    m.batch = hooks_.pick_batch ? hooks_.pick_batch() : Batch{};
    h_prime = batch_digest(m.batch);
  }
  PbftHeader hd{MsgKind::Repropose, c_, v_, s_star + 1, h_prime};
  m.sh.header = encode_pbft_header(hd);
  m.sh.pk = pk_;
  m.sh.sig = sign(sk_, m.sh.header);
  for (const Msg* cand : chosen) m.cert.push_back(cand->sh);
  m.cert2 = best->cert;   // Q* for slot s*
  m.cert3 = best->cert3;  // A* for slot s*+1
  log_send(m, -1);
  hooks_.broadcast(m);
}

void PbftNode::mark_fresh_above(uint64_t slot) {
  auto prune_tuple = [&](auto& map) {
    for (auto it = map.begin(); it != map.end();) {
      if (std::get<1>(it->first) > slot) it = map.erase(it);
      else ++it;
    }
  };
  prune_tuple(prepares_);
  prune_tuple(commits_);
  for (auto it = proposals_.begin(); it != proposals_.end();) {
    if (it->first.second > slot) it = proposals_.erase(it);
    else ++it;
  }
  for (auto it = accepted_.begin(); it != accepted_.end();) {
    if (it->first > slot) it = accepted_.erase(it);
    else ++it;
  }
  for (auto it = prepare_sent_.begin(); it != prepare_sent_.end();) {
    if (it->second > slot) it = prepare_sent_.erase(it);
    else ++it;
  }
  for (auto it = commit_vote_sent_.begin(); it != commit_vote_sent_.end();) {
    if (it->second > slot) it = commit_vote_sent_.erase(it);
    else ++it;
  }
}

void PbftNode::handle_repropose(int from, const Msg& m, const PbftHeader& hd) {
  (void)from;
  if (m.sh.pk != leader_of(committee_, hd.v) || hd.s < 1) {
    invalid_dropped_++;
    return;
  }
  uint64_t s_star = hd.s - 1;

  // S: 2f+1 distinct-signer status headers for this (c, v).
  std::vector<StatusHeader> entries;
  std::set<Bytes> signers;
  for (const auto& sh : m.cert) {
    auto e = parse_status_header(sh.header);
    if (!e || e->c != c_ || e->v != hd.v ||
        e->next_slot != e->last_committed + 1 || !is_member(sh.pk) ||
        !signers.insert(sh.pk).second ||
        !hooks_.verify(sh.pk, sh.header, sh.sig)) {
      invalid_dropped_++;
      return;
    }
    entries.push_back(*e);
  }
  if (entries.size() < 2 * f_ + 1) {
    invalid_dropped_++;
    return;
  }

  // (a) s* must be the highest committed slot reported in S.
  uint64_t max_lc = 0;
  for (const auto& e : entries) max_lc = std::max(max_lc, e.last_committed);
  if (max_lc != s_star) {
    invalid_dropped_++;
    return;
  }

  // (b) Q* must be a commit certificate for slot s*.
  std::optional<PbftHeader> qstar;
  if (s_star >= 1) {
    qstar = validate_quorum_cert(m.cert2, MsgKind::Commit, c_, s_star,
                                 committee_, 2 * f_ + 1, hooks_.verify);
    if (!qstar) {
      invalid_dropped_++;
      return;
    }
  } else if (!m.cert2.empty()) {
    invalid_dropped_++;
    return;
  }

  // (c) A* must certify the highest ranked accepted value for s*+1 in S.
  bool any_accept = false;
  uint64_t max_rank = 0;
  for (const auto& e : entries) {
    if (e.last_committed == s_star && e.has_accept) {
      if (!any_accept || e.rank > max_rank) max_rank = e.rank;
      any_accept = true;
    }
  }
  std::optional<PbftHeader> astar;
  if (any_accept) {
    astar = validate_quorum_cert(m.cert3, MsgKind::Prepare, c_, s_star + 1,
                                 committee_, 2 * f_ + 1, hooks_.verify);
    if (!astar || astar->v != max_rank) {
      invalid_dropped_++;
      return;
    }
    bool claimed = false;
    for (const auto& e : entries) {
      if (e.last_committed == s_star && e.has_accept && e.rank == max_rank &&
          e.h_accepted == astar->h) {
        claimed = true;
        break;
      }
    }
    if (!claimed) {
      invalid_dropped_++;
      return;
    }
    // (d) h' must be the value certified by A*.
    if (hd.h != astar->h) {
      invalid_dropped_++;
      return;
    }
  } else if (!m.cert3.empty()) {
    invalid_dropped_++;
    return;
  }

  if (!m.batch.empty() || !any_accept) {
    if (batch_digest(m.batch) != hd.h) {
      if (!any_accept) {
        invalid_dropped_++;
        return;
      }
    } else {
      if (!any_accept && !batch_valid(m.batch)) {
        invalid_dropped_++;
        return;
      }
      batch_cache_[hex(hd.h)] = m.batch;
    }
  }

  if (hooks_.log) {
    hooks_.log("repropose_valid", hd.h, Json{{"v", hd.v}, {"s", hd.s}});
  }

  if (s_star >= 1) do_commit(s_star, qstar->h, qstar->v, m.cert2);
  mark_fresh_above(s_star + 1);

  // Run the steady-state path for slot s*+1 with value h'.
  if (committed_.count(s_star + 1)) {
    if (committed_[s_star + 1].h != hd.h) {
      safety_conflicts_++;
      if (hooks_.log) hooks_.log("safety_conflict", hd.h, Json{{"s", hd.s}});
    }
    return;
  }
  auto key = std::make_pair(v_, s_star + 1);
  if (!proposals_.count(key)) {
    Proposal p;
    p.have = true;
    p.h = hd.h;
    auto bit = batch_cache_.find(hex(hd.h));
    if (bit != batch_cache_.end()) {
      p.have_batch = true;
      p.batch = bit->second;
    }
    proposals_[key] = p;
  }
  if (!behavior_.withhold_votes && !prepare_sent_.count(key)) {
    send_prepare(s_star + 1, hd.h);
  }
}

}  // namespace qpop
