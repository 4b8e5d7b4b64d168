#include "qpop/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

namespace qpop {

namespace {

[[noreturn]] void fail(const std::string& what) {
  throw std::runtime_error("config: " + what);
}

void require_keys(const Json& j, const std::set<std::string>& allowed,
                  const std::string& ctx) {
  if (!j.is_object()) fail(ctx + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) fail("unknown field " + ctx + "." + it.key());
  }
}

double num_at(const Json& j, const std::string& k, double dflt) {
  if (!j.contains(k)) return dflt;
  if (!j.at(k).is_number()) fail(k + " must be a number");
  return j.at(k).get<double>();
}

uint64_t u64_at(const Json& j, const std::string& k, uint64_t dflt) {
  if (!j.contains(k)) return dflt;
  const Json& v = j.at(k);
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    fail(k + " must be an integer");
  }
  if (v.is_number_integer() && v.get<int64_t>() < 0) {
    fail(k + " must be non-negative");
  }
  return v.get<uint64_t>();
}

std::string str_at(const Json& j, const std::string& k,
                   const std::string& dflt) {
  if (!j.contains(k)) return dflt;
  if (!j.at(k).is_string()) fail(k + " must be a string");
  return j.at(k).get<std::string>();
}

bool bool_at(const Json& j, const std::string& k, bool dflt) {
  if (!j.contains(k)) return dflt;
  if (!j.at(k).is_boolean()) fail(k + " must be a boolean");
  return j.at(k).get<bool>();
}

AdversaryConfig parse_adversary(const Json& j, double default_rho) {
  require_keys(j,
               {"rho", "strategies", "r_a_rate", "break_prob", "delay_policy",
                "f_genesis", "spam_invalid_per_round"},
               "adversary");
  AdversaryConfig a;
  a.rho = num_at(j, "rho", default_rho);
  a.r_a_rate = num_at(j, "r_a_rate", 0);
  a.break_prob = num_at(j, "break_prob", -1);
  a.delay_policy = str_at(j, "delay_policy", "uniform");
  a.f_genesis = u64_at(j, "f_genesis", 0);
  a.spam_invalid_per_round = u64_at(j, "spam_invalid_per_round", 16);
  if (j.contains("strategies")) {
    if (!j.at("strategies").is_array()) fail("adversary.strategies must be an array");
    for (const auto& s : j.at("strategies")) {
      if (!s.is_string()) fail("adversary.strategies entries must be strings");
      auto st = strategy_from_name(s.get<std::string>());
      if (!st) fail("unknown strategy " + s.get<std::string>());
      a.strategies.push_back(*st);
    }
  }
  if (a.delay_policy != "uniform" && a.delay_policy != "max" &&
      a.delay_policy != "zero") {
    fail("adversary.delay_policy must be uniform|max|zero");
  }
  if (a.rho < 0 || a.rho > 1) fail("adversary.rho must be in [0, 1]");
  if (a.break_prob > 1) fail("adversary.break_prob must be <= 1");
  return a;
}

std::vector<ParticipantCfg> parse_participants(const Json& j) {
  if (!j.is_array()) fail("participants must be an array");
  std::vector<ParticipantCfg> out;
  std::set<std::string> ids;
  for (const auto& p : j) {
    require_keys(p, {"id", "devices", "byzantine"}, "participants[]");
    ParticipantCfg pc;
    pc.id = str_at(p, "id", "");
    if (pc.id.empty()) fail("participants[].id must be a non-empty string");
    if (!ids.insert(pc.id).second) fail("duplicate participant id " + pc.id);
    pc.byzantine = bool_at(p, "byzantine", false);
    if (!p.contains("devices") || !p.at("devices").is_array()) {
      fail("participants[].devices must be an array of cell indices");
    }
    for (const auto& c : p.at("devices")) {
      if (!c.is_number_integer() && !c.is_number_unsigned()) {
        fail("device cells must be integers");
      }
      pc.devices.push_back(c.get<uint64_t>());
    }
    out.push_back(std::move(pc));
  }
  return out;
}

}  // namespace

GroupParams find_group(uint64_t bits) {
  if (bits < 5 || bits > 41) fail("dlog_bits must be in [5, 41]");
  for (uint64_t p = (uint64_t(1) << (bits - 1)) | 1;
       p < (uint64_t(1) << bits); p += 2) {
    uint64_t q = (p - 1) / 2;
    if (is_prime_u64(p) && is_prime_u64(q)) {
      return derive_group_custom(p, q, 4);
    }
  }
  fail("no safe prime with " + std::to_string(bits) + " bits");
}

GroupParams ScenarioConfig::group() const {
  if (dlog_bits == 5) return derive_group_small();
  if (dlog_bits == 6) return derive_group_medium();
  return find_group(dlog_bits);
}

ScenarioConfig parse_scenario(const Json& doc) {
  require_keys(doc,
               {"n", "epsilon", "rho", "lambda", "gamma", "delta",
                "tau_reconfig", "tau_register", "tau_v", "T", "T_prime",
                "dlog_bits", "R_H", "R_A", "seed", "participants", "adversary",
                "mode", "registration_mode", "c_signal", "line_length",
                "verifier_offset", "poq_time", "epsilon_slack",
                "honest_fail_prob", "batch_size", "trials"},
               "config");
  ScenarioConfig c;
  c.n = u64_at(doc, "n", c.n);
  c.epsilon = num_at(doc, "epsilon", c.epsilon);
  c.rho = num_at(doc, "rho", c.rho);
  c.lambda = num_at(doc, "lambda", c.lambda);
  c.gamma = num_at(doc, "gamma", c.gamma);
  c.delta = num_at(doc, "delta", c.delta);
  c.tau_reconfig = u64_at(doc, "tau_reconfig", c.tau_reconfig);
  c.tau_register = num_at(doc, "tau_register", c.tau_register);
  c.tau_v = num_at(doc, "tau_v", c.tau_v);
  c.T = u64_at(doc, "T", c.T);
  c.T_prime = u64_at(doc, "T_prime", c.T_prime);
  c.dlog_bits = u64_at(doc, "dlog_bits", c.dlog_bits);
  c.R_H = num_at(doc, "R_H", c.R_H);
  c.R_A = num_at(doc, "R_A", c.R_A);
  c.seed = u64_at(doc, "seed", c.seed);
  c.mode = str_at(doc, "mode", c.mode);
  c.registration_mode = str_at(doc, "registration_mode", c.registration_mode);
  c.c_signal = num_at(doc, "c_signal", c.c_signal);
  c.line_length = num_at(doc, "line_length", c.line_length);
  c.verifier_offset = num_at(doc, "verifier_offset", c.verifier_offset);
  c.poq_time = num_at(doc, "poq_time", c.poq_time);
  c.epsilon_slack = num_at(doc, "epsilon_slack", c.epsilon_slack);
  c.honest_fail_prob = num_at(doc, "honest_fail_prob", c.honest_fail_prob);
  c.batch_size = u64_at(doc, "batch_size", c.batch_size);
  c.trials = u64_at(doc, "trials", c.trials);
  if (doc.contains("participants")) {
    c.participants = parse_participants(doc.at("participants"));
  }
  c.adversary = doc.contains("adversary")
                    ? parse_adversary(doc.at("adversary"), c.rho)
                    : AdversaryConfig{};
  if (!doc.contains("adversary")) c.adversary.rho = c.rho;

  if (c.n < 1) fail("n must be >= 1");
  if (c.mode != "full" && c.mode != "committee_mc") {
    fail("mode must be full|committee_mc");
  }
  if (c.registration_mode != "plain" &&
      c.registration_mode != "spam_resistant") {
    fail("registration_mode must be plain|spam_resistant");
  }
  if (c.epsilon < 0 || c.epsilon >= 1.0 / 3) fail("epsilon must be in [0, 1/3)");
  if (c.rho < 0 || c.rho > 1) fail("rho must be in [0, 1]");
  if (c.gamma <= 0 || c.line_length < c.gamma) {
    fail("need 0 < gamma <= line_length");
  }
  if (c.delta <= 0 || c.tau_v <= 0 || c.tau_register <= 0 ||
      c.tau_reconfig < 1) {
    fail("delta, tau_v, tau_register, tau_reconfig must be positive");
  }
  if (c.R_H <= 0) fail("R_H must be positive");
  if (c.tau_register < 1.0 / c.R_H) {
    fail("tau_register must be >= 1/R_H so honest parties can register");
  }
  if (c.dlog_bits < 5 || c.dlog_bits > 41) fail("dlog_bits must be in [5, 41]");
  if (double(c.adversary.f_genesis) >= (1.0 / 3 - c.epsilon) * double(c.n)) {
    fail("genesis Byzantine count must stay below (1/3 - epsilon) n");
  }
  uint64_t cells = uint64_t(std::floor(c.line_length / c.gamma));
  for (const auto& p : c.participants) {
    for (uint64_t cell : p.devices) {
      if (cell >= cells) {
        fail("participant " + p.id + " device cell out of range");
      }
    }
  }

  if (c.rho >= 1.0 / 3 - c.epsilon) {
    c.warnings.push_back("rho >= 1/3 - epsilon: outside the safe region");
  }
  double K = std::floor(c.R_A * c.tau_register);
  if (K >= 1 && c.lambda <= std::log2(K)) {
    c.warnings.push_back("lambda <= log2(K): position-verification margin gone");
  }
  return c;
}

ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const std::exception& e) {
    fail(path + ": " + e.what());
  }
  return parse_scenario(doc);
}

}  // namespace qpop
