#include "qpop/simnet.hpp"

#include <stdexcept>

namespace qpop {

void Scheduler::schedule(SimTime at, std::function<void()> fn) {
  if (at < now_) throw std::logic_error("scheduling an event in the past");
  queue_.push(Ev{at, seq_++, std::move(fn)});
}

SimTime Scheduler::next_time() const {
  if (queue_.empty()) throw std::logic_error("empty scheduler");
  return queue_.top().t;
}

uint64_t Scheduler::run_until(SimTime t_end) {
  uint64_t count = 0;
  while (!queue_.empty() && queue_.top().t <= t_end) {
    Ev ev = queue_.top();
    queue_.pop();
    now_ = ev.t;
    ev.fn();
    count++;
  }
  if (now_ < t_end) now_ = t_end;
  return count;
}

uint64_t Scheduler::run_all() {
  uint64_t count = 0;
  while (!queue_.empty()) {
    Ev ev = queue_.top();
    queue_.pop();
    now_ = ev.t;
    ev.fn();
    count++;
  }
  return count;
}

void Net::send(Envelope env, std::function<void()> deliver) {
  env.send_time = sched_.now();
  double delay = policy_ ? policy_(env) : 0.0;
  if (delay < 0 || delay > cfg_.delta) {
    policy_violations_++;
    if (log_) {
      log_->emit(env.send_time, "delay_policy_violation",
                 std::to_string(env.sender), std::to_string(env.recipient),
                 env.payload_digest, Json{{"delay", delay}});
    }
    delay = delay < 0 ? 0.0 : cfg_.delta;
  }
  env.deliver_time = env.send_time + delay;
  sched_.schedule(env.deliver_time, std::move(deliver));
}

void Gossip::submit(std::string_view sender, const Bytes& payload,
                    double delay) {
  Digest d = sha256(payload);
  std::string key = hex(d);
  if (!seen_.insert(key).second) {
    duplicates_++;
    return;
  }
  if (delay < 0) delay = 0;
  if (delay > cfg_.delta) delay = cfg_.delta;
  bool valid = !filter_ || filter_(payload);
  SimTime at = sched_.now() + delay;
  if (!valid) {
    dropped_invalid_++;
    if (log_) {
      log_->emit(sched_.now(), "gossip_drop", sender, "*", d,
                 Json{{"reason", "invalid"}});
    }
    return;
  }
  if (log_) log_->emit(sched_.now(), "gossip", sender, "*", d);
  for (auto& sink : sinks_) {
    sched_.schedule(at, [sink, payload, at] { sink(payload, at); });
  }
}

}  // namespace qpop
