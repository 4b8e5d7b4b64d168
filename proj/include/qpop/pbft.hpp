#pragma once

#include <map>
#include <set>
#include <unordered_map>

#include "qpop/simnet.hpp"
#include "qpop/wire.hpp"

namespace qpop {

inline uint64_t pbft_f(uint64_t n) { return (n - 1) / 3; }

inline const Bytes& leader_of(const std::vector<Bytes>& committee, uint64_t v) {
  return committee[v % committee.size()];
}

struct CommitRecord {
  Digest h{};
  bool have_batch = false;
  Batch batch;
  Cert q;
  uint64_t view = 0;
  SimTime at = 0;
};

// Byzantine controls for a corrupted seat. All false = honest behavior.
struct SeatBehavior {
  bool silent_leader = false;      // suppress propose, new-view, repropose
  bool equivocate_leader = false;  // conflicting proposals to disjoint halves
  bool withhold_votes = false;     // drop prepare and commit broadcasts
  bool double_vote = false;        // prepare every proposal seen, even conflicting
};

// One committee member's deterministic state machine for the ordering
// protocol: propose/prepare/commit/notify steady state plus
// view-change/new-view/status/repropose leader replacement.
class PbftNode {
 public:
  struct Hooks {
    std::function<void(int to, const Msg&)> send;
    std::function<void(const Msg&)> broadcast;  // includes self-delivery
    std::function<SimTime()> now;
    std::function<void(SimTime delay, std::function<void()>)> defer;
    std::function<void(std::string_view kind, const Digest& payload, Json)> log;
    VerifyFn verify;
    std::function<Batch()> pick_batch;
    std::function<void(PbftNode&, uint64_t slot, const CommitRecord&)> on_commit;
  };

  PbftNode(int seat, Bytes pk, Bytes sk, std::vector<Bytes> committee,
           uint64_t c, double delta, Hooks hooks);

  void set_behavior(const SeatBehavior& b) { behavior_ = b; }
  void set_max_slot(uint64_t s) { max_slot_ = s; }
  void seed_spent(const std::set<uint64_t>& spent) { spent_ = spent; }

  // Arms the steady timer and, on the leader, proposes. Called at genesis
  // and whenever the world raises the slot budget.
  void start();
  // Re-activate after the slot budget grows: idempotent for running nodes.
  void kick();

  void on_message(int from, const Msg& m);

  int seat() const { return seat_; }
  const Bytes& pk() const { return pk_; }
  uint64_t view() const { return v_; }
  uint64_t slot() const { return slot_; }
  uint64_t committee_index() const { return c_; }
  const std::map<uint64_t, CommitRecord>& committed() const { return committed_; }
  const std::set<uint64_t>& spent() const { return spent_; }
  uint64_t view_changes_sent() const { return view_changes_sent_; }
  uint64_t equivocations_seen() const { return equivocations_seen_; }
  uint64_t invalid_dropped() const { return invalid_dropped_; }
  uint64_t safety_conflicts() const { return safety_conflicts_; }
  bool idle() const { return slot_ > max_slot_; }

 private:
  struct Proposal {
    bool have = false;
    Digest h{};
    bool have_batch = false;
    Batch batch;
  };
  struct AcceptState {
    bool have = false;
    uint64_t view = 0;
    Digest h{};
    Cert cert;
  };
  enum class TimerKind { None, Steady, AwaitNewView, PostNewView };

  // message handlers
  void handle_propose(int from, const Msg& m, const PbftHeader& hd);
  void handle_prepare(int from, const Msg& m, const PbftHeader& hd);
  void handle_commit(int from, const Msg& m, const PbftHeader& hd);
  void handle_notify(int from, const Msg& m, const PbftHeader& hd);
  void handle_view_change(int from, const Msg& m, const PbftHeader& hd);
  void handle_vc_bundle(int from, const Msg& m);
  void handle_new_view(int from, const Msg& m, const PbftHeader& hd);
  void handle_status(int from, const Msg& m);
  void handle_repropose(int from, const Msg& m, const PbftHeader& hd);

  // steady-state actions
  void propose_if_leader();
  void send_prepare(uint64_t s, const Digest& h);
  void check_prepare_quorum(uint64_t v, uint64_t s, const Digest& h);
  void check_commit_quorum(uint64_t v, uint64_t s, const Digest& h);
  void do_commit(uint64_t s, const Digest& h, uint64_t view, const Cert& q);
  void advance_slot();

  // view-change actions
  void maybe_act_on_vc_quorum(uint64_t target_v);
  void enter_view(uint64_t v_new);
  void send_status();
  void try_repropose();
  bool validate_status_msg(const Msg& m, StatusHeader& out) const;
  void mark_fresh_above(uint64_t slot);

  // timers
  void arm_timer(TimerKind kind, double delay, uint64_t aux);
  void disarm_timer();
  void on_timer(TimerKind kind, uint64_t aux);

  bool is_member(const Bytes& pk) const;
  bool batch_valid(const Batch& b) const;
  Msg make_signed(MsgKind kind, uint64_t s, const Digest& h) const;
  void log_send(const Msg& m, int to) const;

  int seat_;
  Bytes pk_, sk_;
  std::vector<Bytes> committee_;
  uint64_t n_, f_;
  uint64_t c_;
  double delta_;
  Hooks hooks_;
  SeatBehavior behavior_;

  uint64_t v_ = 0;
  uint64_t slot_ = 1;
  uint64_t max_slot_ = UINT64_MAX;
  bool abandoned_ = false;
  uint64_t commits_since_entry_ = 0;

  std::map<uint64_t, CommitRecord> committed_;
  std::map<std::pair<uint64_t, uint64_t>, Proposal> proposals_;  // (v, s)
  // (v, s, h-hex) -> signer pk-hex -> header
  std::map<std::tuple<uint64_t, uint64_t, std::string>,
           std::map<std::string, SignedHeader>>
      prepares_, commits_;
  std::map<uint64_t, AcceptState> accepted_;  // slot -> best accept
  std::map<uint64_t, std::map<std::string, SignedHeader>> viewchanges_;
  std::set<uint64_t> vc_forwarded_;
  std::map<uint64_t, std::map<std::string, Msg>> statuses_;
  std::set<uint64_t> reproposed_;
  std::set<std::pair<uint64_t, uint64_t>> commit_vote_sent_;  // (v, s)
  std::set<std::pair<uint64_t, uint64_t>> prepare_sent_;      // (v, s)
  std::set<uint64_t> notified_;
  std::unordered_map<std::string, Batch> batch_cache_;
  std::set<uint64_t> spent_;
  std::map<uint64_t, std::vector<std::pair<int, Msg>>> future_;  // view -> msgs

  TimerKind armed_ = TimerKind::None;
  uint64_t timer_gen_ = 0;

  uint64_t view_changes_sent_ = 0;
  uint64_t equivocations_seen_ = 0;
  uint64_t invalid_dropped_ = 0;
  uint64_t safety_conflicts_ = 0;
};

}  // namespace qpop
