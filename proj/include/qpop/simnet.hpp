#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "qpop/event_log.hpp"
#include "qpop/hash.hpp"

namespace qpop {

using SimTime = double;

struct NetworkConfig {
  double delta = 1.0;        // max committee message delay
  double c_signal = 1.0;     // propagation speed, distance units per second
  double line_length = 16.0; // extent of the 1-D space
};

inline SimTime prop_delay(double a, double b, const NetworkConfig& cfg) {
  double d = a > b ? a - b : b - a;
  return d / cfg.c_signal;
}

// Deterministic discrete-event scheduler. Events run in (time, insertion
// sequence) order; ties break by insertion sequence.
class Scheduler {
 public:
  void schedule(SimTime at, std::function<void()> fn);
  // Processes every event with t <= t_end, returns the processed count.
  uint64_t run_until(SimTime t_end);
  uint64_t run_all();
  SimTime now() const { return now_; }
  bool empty() const { return queue_.empty(); }
  SimTime next_time() const;

 private:
  struct Ev {
    SimTime t;
    uint64_t seq;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Ev& a, const Ev& b) const {
      if (a.t != b.t) return a.t > b.t;
      return a.seq > b.seq;
    }
  };
  std::priority_queue<Ev, std::vector<Ev>, Later> queue_;
  SimTime now_ = 0;
  uint64_t seq_ = 0;
};

struct Envelope {
  int sender = -1;
  int recipient = -1;  // -1 means every registered node
  std::string kind;
  Digest payload_digest{};
  SimTime send_time = 0;
  SimTime deliver_time = 0;
};

// Point-to-point committee network with adversary-chosen delays in [0, delta].
class Net {
 public:
  using DelayPolicy = std::function<double(const Envelope&)>;

  Net(Scheduler& sched, const NetworkConfig& cfg, EventLog* log)
      : sched_(sched), cfg_(cfg), log_(log) {}

  void set_delay_policy(DelayPolicy p) { policy_ = std::move(p); }
  const NetworkConfig& config() const { return cfg_; }

  // Delivers fn at send time + policy delay; out-of-range delays are clamped
  // and counted as policy violations.
  void send(Envelope env, std::function<void()> deliver);

  uint64_t policy_violations() const { return policy_violations_; }

 private:
  Scheduler& sched_;
  NetworkConfig cfg_;
  EventLog* log_;
  DelayPolicy policy_;
  uint64_t policy_violations_ = 0;
};

// Validity-filtered flood gossip with per-node dedup. A valid message
// reaches every sink at the same instant send_time + delay (delay <= Delta);
// an invalid one is dropped at first contact and counted.
class Gossip {
 public:
  using Filter = std::function<bool(const Bytes&)>;
  using Sink = std::function<void(const Bytes&, SimTime)>;

  Gossip(Scheduler& sched, const NetworkConfig& cfg, EventLog* log)
      : sched_(sched), cfg_(cfg), log_(log) {}

  void set_filter(Filter f) { filter_ = std::move(f); }
  void add_sink(Sink s) { sinks_.push_back(std::move(s)); }
  void reset_seen() { seen_.clear(); }

  void submit(std::string_view sender, const Bytes& payload, double delay);

  uint64_t dropped_invalid() const { return dropped_invalid_; }
  uint64_t forwarded_invalid() const { return forwarded_invalid_; }
  uint64_t duplicates() const { return duplicates_; }

 private:
  Scheduler& sched_;
  NetworkConfig cfg_;
  EventLog* log_;
  Filter filter_;
  std::vector<Sink> sinks_;
  std::unordered_set<std::string> seen_;
  uint64_t dropped_invalid_ = 0;
  uint64_t forwarded_invalid_ = 0;
  uint64_t duplicates_ = 0;
};

}  // namespace qpop
