#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "qpop/committee_mc.hpp"
#include "qpop/group.hpp"
#include "qpop/scenario.hpp"
#include "qpop/world.hpp"

namespace fs = std::filesystem;
using namespace qpop;

namespace {

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

int cmd_run(const std::string& config_path, int64_t seed_override,
            const std::string& out_dir) {
  ScenarioConfig cfg = load_scenario_file(config_path);
  if (seed_override >= 0) cfg.seed = uint64_t(seed_override);
  fs::create_directories(out_dir);

  if (cfg.mode == "committee_mc") {
    McParams p;
    p.n = cfg.n;
    p.rho = cfg.rho;
    p.T = cfg.T;
    p.trials = cfg.trials;
    p.seed = cfg.seed;
    p.epsilon = cfg.epsilon;
    McEstimate est = committee_mc(p);
    std::string doc = est.to_json().dump(2) + "\n";
    write_file(fs::path(out_dir) / "estimate.json", doc);
    std::cout << "committee-mc: trials=" << est.trials
              << " violations=" << est.violation_count
              << " mean_f=" << est.mean_f << " out=" << out_dir << "\n";
    return 0;
  }

  WorldResult res = run_world(cfg, true);
  write_file(fs::path(out_dir) / "events.jsonl", res.events_jsonl);
  write_file(fs::path(out_dir) / "metrics.json",
             res.metrics.to_json().dump(2) + "\n");
  write_file(fs::path(out_dir) / "committee.csv", res.committee_csv);
  std::cout << "run: commits=" << res.metrics.commits
            << " epochs=" << res.metrics.epochs
            << " view_changes=" << res.metrics.view_changes
            << " safety_violation="
            << (res.metrics.safety_violation ? "true" : "false")
            << " out=" << out_dir << "\n";
  return res.metrics.safety_violation ? 1 : 0;
}

int cmd_committee_mc(uint64_t n, double rho, uint64_t T, uint64_t trials,
                     uint64_t seed) {
  McParams p;
  p.n = n;
  p.rho = rho;
  p.T = T;
  p.trials = trials;
  p.seed = seed;
  McEstimate est = committee_mc(p);
  std::cout << est.to_json().dump(2) << "\n";
  return 0;
}

int cmd_report(const std::string& in_dir, const std::string& format) {
  fs::path dir(in_dir);
  if (fs::exists(dir / "metrics.json")) {
    std::string doc = read_file(dir / "metrics.json");
    if (format == "json") {
      std::cout << doc;
      return 0;
    }
    std::cout << read_file(dir / "committee.csv");
    return 0;
  }
  if (fs::exists(dir / "estimate.json")) {
    std::string doc = read_file(dir / "estimate.json");
    if (format == "json") {
      std::cout << doc;
      return 0;
    }
    Json j = Json::parse(doc);
    std::cout << "key,value\n";
    for (const auto& [k, v] : j.items()) std::cout << k << "," << v.dump() << "\n";
    return 0;
  }
  std::cerr << "report: no metrics.json or estimate.json in " << in_dir << "\n";
  return 1;
}

int cmd_dlog(bool solve, uint64_t p, uint64_t q, uint64_t g, uint64_t h,
             uint64_t x, bool have_x) {
  GroupParams gp = derive_group_custom(p, q, g);
  if (solve) {
    SolverBudget budget = SolverBudget::unlimited();
    auto sol = solve_dlog(gp, PuzzleTarget{h}, budget);
    if (!sol) return 1;
    std::cout << sol->x << "\n";
    return 0;
  }
  if (!have_x) throw CLI::ValidationError("dlog verify requires --x");
  return verify_dlog(gp, PuzzleTarget{h}, PuzzleSolution{x}) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Position-verified committee consensus simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Execute a scenario config");
  std::string config_path, out_dir = "run-out";
  int64_t seed_override = -1;
  run->add_option("--config", config_path, "Scenario JSON document")
      ->required();
  run->add_option("--seed", seed_override, "Override the config seed");
  run->add_option("--out", out_dir, "Output directory");

  auto* mc = app.add_subcommand("committee-mc",
                                "Committee-evolution Monte Carlo");
  uint64_t mc_n = 100, mc_T = 1000, mc_trials = 1000, mc_seed = 0;
  double mc_rho = 0.15;
  mc->add_option("--n", mc_n, "Committee size")->required();
  mc->add_option("--rho", mc_rho, "Adversarial device fraction")->required();
  mc->add_option("--T", mc_T, "Epoch horizon")->required();
  mc->add_option("--trials", mc_trials, "Trial count")->required();
  mc->add_option("--seed", mc_seed, "Master seed");

  auto* dlog = app.add_subcommand("dlog", "Puzzle solving and verification");
  dlog->require_subcommand(1);
  auto* dsolve = dlog->add_subcommand("solve", "Find x with g^x = h mod p");
  auto* dverify = dlog->add_subcommand("verify", "Check g^x = h mod p");
  uint64_t d_p = 0, d_q = 0, d_g = 0, d_h = 0, d_x = 0;
  for (auto* sub : {dsolve, dverify}) {
    sub->set_help_flag("--help", "Print help");
    sub->add_option("--p", d_p, "Safe prime modulus")->required();
    sub->add_option("--q", d_q, "Subgroup order (p-1)/2")->required();
    sub->add_option("--g", d_g, "Subgroup generator")->required();
    sub->add_option("--h", d_h, "Target element")->required();
  }
  auto* xopt = dverify->add_option("--x", d_x, "Claimed exponent");

  auto* report = app.add_subcommand("report", "Print a run's report");
  std::string in_dir, format = "json";
  report->add_option("--in", in_dir, "Run output directory")->required();
  report->add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, seed_override, out_dir);
    if (mc->parsed())
      return cmd_committee_mc(mc_n, mc_rho, mc_T, mc_trials, mc_seed);
    if (dlog->parsed())
      return cmd_dlog(dsolve->parsed(), d_p, d_q, d_g, d_h, d_x,
                      xopt->count() > 0);
    if (report->parsed()) return cmd_report(in_dir, format);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
