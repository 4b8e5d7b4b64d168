#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qpop/hash.hpp"

namespace qpop {

using Json = nlohmann::ordered_json;

// Append-only run log. One JSON object per event; the base fields
// {t, kind, sender, recipient, payload_digest} are always present and
// kind-specific detail fields follow them.
class EventLog {
 public:
  void emit(double t, std::string_view kind, std::string_view sender,
            std::string_view recipient, const Digest& payload_digest,
            Json detail = Json::object());

  const std::vector<Json>& events() const { return events_; }
  std::string to_jsonl() const;
  void clear() { events_.clear(); }

 private:
  std::vector<Json> events_;
};

}  // namespace qpop
