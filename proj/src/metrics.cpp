#include "qpop/metrics.hpp"

#include <sstream>

namespace qpop {

Json MetricsReport::to_json() const {
  Json rows = Json::array();
  for (const auto& r : committee) {
    rows.push_back(Json{{"epoch", r.epoch},
                        {"f_t", r.f_t},
                        {"admitted", r.admitted},
                        {"evicted", r.evicted}});
  }
  Json elect = Json::object();
  for (const auto& [id, k] : elections) elect[id] = k;
  Json warn = Json::array();
  for (const auto& w : warnings) warn.push_back(w);
  Json traj = Json::array();
  for (uint64_t v : f_t) traj.push_back(v);
  return Json{
      {"f_t", traj},
      {"safety_violation", safety_violation},
      {"safety_violation_t",
       safety_violation ? Json(safety_violation_t) : Json(nullptr)},
      {"commits", commits},
      {"mean_commit_latency", mean_commit_latency},
      {"max_commit_latency", max_commit_latency},
      {"view_changes", view_changes},
      {"spam",
       Json{{"submitted", spam_submitted},
            {"rejected", spam_rejected},
            {"forwarded", spam_forwarded}}},
      {"cvpv",
       Json{{"instances", cvpv_instances},
            {"accepts", cvpv_accepts},
            {"attack_accepts", cvpv_attack_accepts}}},
      {"elections", elect},
      {"epochs", epochs},
      {"txs", Json{{"committed", committed_txs}, {"pending", pending_txs}}},
      {"model_violations", model_violations},
      {"warnings", warn},
      {"committee", rows},
  };
}

std::optional<MetricsReport> MetricsReport::from_json(const Json& j) {
  MetricsReport r;
  try {
    for (const auto& v : j.at("f_t")) r.f_t.push_back(v.get<uint64_t>());
    r.safety_violation = j.at("safety_violation").get<bool>();
    r.safety_violation_t = j.at("safety_violation_t").is_null()
                               ? -1
                               : j.at("safety_violation_t").get<double>();
    r.commits = j.at("commits").get<uint64_t>();
    r.mean_commit_latency = j.at("mean_commit_latency").get<double>();
    r.max_commit_latency = j.at("max_commit_latency").get<double>();
    r.view_changes = j.at("view_changes").get<uint64_t>();
    r.spam_submitted = j.at("spam").at("submitted").get<uint64_t>();
    r.spam_rejected = j.at("spam").at("rejected").get<uint64_t>();
    r.spam_forwarded = j.at("spam").at("forwarded").get<uint64_t>();
    r.cvpv_instances = j.at("cvpv").at("instances").get<uint64_t>();
    r.cvpv_accepts = j.at("cvpv").at("accepts").get<uint64_t>();
    r.cvpv_attack_accepts = j.at("cvpv").at("attack_accepts").get<uint64_t>();
    for (auto it = j.at("elections").begin(); it != j.at("elections").end();
         ++it) {
      r.elections[it.key()] = it.value().get<uint64_t>();
    }
    r.epochs = j.at("epochs").get<uint64_t>();
    r.committed_txs = j.at("txs").at("committed").get<uint64_t>();
    r.pending_txs = j.at("txs").at("pending").get<uint64_t>();
    r.model_violations = j.at("model_violations").get<uint64_t>();
    for (const auto& w : j.at("warnings")) {
      r.warnings.push_back(w.get<std::string>());
    }
    for (const auto& row : j.at("committee")) {
      CommitteeRow cr;
      cr.epoch = row.at("epoch").get<uint64_t>();
      cr.f_t = row.at("f_t").get<uint64_t>();
      cr.admitted = row.at("admitted").get<std::string>();
      cr.evicted = row.at("evicted").get<std::string>();
      r.committee.push_back(std::move(cr));
    }
  } catch (const std::exception&) {
    return std::nullopt;
  }
  return r;
}

std::string MetricsReport::committee_csv() const {
  std::ostringstream out;
  out << "epoch,f_t,admitted,evicted\n";
  for (const auto& r : committee) {
    out << r.epoch << ',' << r.f_t << ',' << r.admitted << ',' << r.evicted
        << '\n';
  }
  return out.str();
}

}  // namespace qpop
