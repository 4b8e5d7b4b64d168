#include "qpop/event_log.hpp"

namespace qpop {

void EventLog::emit(double t, std::string_view kind, std::string_view sender,
                    std::string_view recipient, const Digest& payload_digest,
                    Json detail) {
  Json e;
  e["t"] = t;
  e["kind"] = std::string(kind);
  e["sender"] = std::string(sender);
  e["recipient"] = std::string(recipient);
  e["payload_digest"] = hex(payload_digest);
  for (auto& [k, v] : detail.items()) e[k] = v;
  events_.push_back(std::move(e));
}

std::string EventLog::to_jsonl() const {
  std::string out;
  for (const auto& e : events_) {
    out += e.dump();
    out += '\n';
  }
  return out;
}

}  // namespace qpop
