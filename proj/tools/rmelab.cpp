#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "rme/checker.hpp"
#include "rme/experiment.hpp"
#include "rme/explore.hpp"
#include "rme/scenario.hpp"

using namespace rme;
namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kExitClean = 0;
constexpr int kExitViolation = 1;
constexpr int kExitUsage = 2;

struct CommonOpts {
  std::string lock = "wr";
  std::uint32_t n = 2;
  std::uint32_t levels = 0;
  bool reclaim = false;
  std::string model = "dsm";
  bool weak_cc = false;
  std::uint32_t requests = 2;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--lock", o.lock, "lock stack: wr | semi | super | base")
      ->check(CLI::IsMember({"wr", "semi", "super", "base"}))
      ->capture_default_str();
  cmd->add_option("--n", o.n, "number of simulated processes")->capture_default_str();
  cmd->add_option("--levels", o.levels, "super-adaptive level count (0 = default)")
      ->capture_default_str();
  cmd->add_flag("--reclaim", o.reclaim, "bounded-space node reclamation");
  cmd->add_option("--model", o.model, "memory model: dsm | cc")
      ->check(CLI::IsMember({"dsm", "cc"}))
      ->capture_default_str();
  cmd->add_flag("--weak-cc", o.weak_cc, "failed CAS does not invalidate (CC only)");
  cmd->add_option("--requests", o.requests, "super-passages per process")
      ->capture_default_str();
}

BenchCfg to_bench(const CommonOpts& o) {
  BenchCfg cfg;
  cfg.stack = o.lock;
  cfg.n = o.n;
  cfg.levels = o.levels;
  cfg.reclamation = o.reclaim;
  cfg.model = RmrModel{o.model == "cc" ? MemModel::CC : MemModel::DSM, !o.weak_cc};
  cfg.requests = o.requests;
  if (cfg.reclamation && cfg.stack == "base")
    throw CLI::ValidationError("--reclaim requires a wrlock-based stack (wr, semi, super)");
  return cfg;
}

std::string default_out() {
  const char* env = std::getenv("RMELAB_OUT");
  return env ? env : "out";
}

LockId top_lock_id(const History& h) {
  for (const LockInfo& li : h.locks)
    if (li.name == "wr" || li.name == "semi" || li.name == "super.L1" || li.name == "base" ||
        li.name == "hand")
      return li.id;
  if (h.locks.empty()) throw MalformedHistory("history has no lock table");
  return h.locks.front().id;
}

StepBounds default_bounds() { return StepBounds{64, 96, 24}; }

ordered_json verdict_for(const History& h) {
  LockId top = top_lock_id(h);
  ordered_json out = ordered_json::parse(verdict_json(h, top, default_bounds()));
  // weakly recoverable stacks may overlap CS inside consequence intervals;
  // strongly recoverable ones must never overlap at all
  bool weak = false;
  for (const LockInfo& li : h.locks)
    if (li.id == top && li.kind == "wrlock") weak = true;
  out["weakly_recoverable"] = weak;
  bool violation = false;
  if (weak) {
    violation |= !out["responsive"].get<bool>();
  } else {
    violation |= out["me_violations"].get<std::uint64_t>() != 0;
  }
  violation |= !out["step_bounds_ok"].get<bool>();
  violation |= out["ci_fcfs_violations"].get<std::uint64_t>() != 0;
  violation |= out["fcfs1_violations"].get<std::uint64_t>() != 0;
  out["violation"] = violation;
  return out;
}

int cmd_run(const CommonOpts& o, std::uint32_t seeds, std::uint64_t seed0, double crash_prob,
            std::uint32_t budget, const std::string& scenario, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream csv(fs::path(out_dir) / "metrics.csv");
  write_metrics_csv_header(csv);
  bool any_violation = false;

  auto emit = [&](const History& h, std::uint64_t seed) {
    std::ofstream hf(fs::path(out_dir) / ("history_" + std::to_string(seed) + ".jsonl"));
    write_history(h, hf);
    write_metrics_csv(metrics(h, top_lock_id(h)), seed, csv);
    ordered_json v = verdict_for(h);
    if (v["violation"].get<bool>()) any_violation = true;
  };

  if (scenario == "crash-after-fas") {
    History h = scenario_crash_after_fas(std::max(o.n, 2u),
                                         to_bench(o).model);
    emit(h, seed0);
  } else if (scenario.rfind("escalate-", 0) == 0) {
    std::uint32_t x = static_cast<std::uint32_t>(std::stoul(scenario.substr(9)));
    std::uint32_t levels = o.levels ? o.levels : std::max(x, 2u);
    History h = scenario_escalation(x, std::max(o.n, x), to_bench(o).model, levels);
    emit(h, seed0);
  } else if (!scenario.empty()) {
    std::cerr << "unknown scenario: " << scenario << "\n";
    return kExitUsage;
  } else {
    for (std::uint32_t s = 0; s < seeds; ++s) {
      RunCfg rc;
      rc.bench = to_bench(o);
      rc.seed = seed0 + s;
      rc.crash_prob = crash_prob;
      rc.crash_budget_per_sp = budget;
      SeededRun r = run_seeded(rc);
      emit(r.history, rc.seed);
    }
  }
  std::cout << "wrote " << out_dir << "/metrics.csv\n";
  return any_violation ? kExitViolation : kExitClean;
}

int cmd_check(const std::vector<std::string>& files, bool print_rows) {
  bool any_violation = false;
  for (const std::string& f : files) {
    std::ifstream is(f);
    if (!is) {
      std::cerr << "cannot open " << f << "\n";
      return kExitUsage;
    }
    History h = read_history(is);
    ordered_json v = verdict_for(h);
    v["file"] = f;
    std::cout << v.dump() << "\n";
    if (v["violation"].get<bool>()) any_violation = true;
    if (print_rows) {
      write_metrics_csv_header(std::cout);
      write_metrics_csv(metrics(h, top_lock_id(h)), h.seed, std::cout);
    }
  }
  return any_violation ? kExitViolation : kExitClean;
}

int cmd_sweep(const CommonOpts& o, std::vector<std::uint32_t> ns, std::uint32_t fmax,
              std::uint32_t seeds, double crash_prob, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream table(fs::path(out_dir) / "gtable.csv");
  table << "n,failures,max_rmr,max_ff_rmr,passages\n";
  bool envelope_ok = true;
  std::uint64_t calibration = 0;  // C from the smallest-n, F=0 cell
  std::vector<std::uint64_t> f0_column;
  bool monotone = true;

  for (std::uint32_t n : ns) {
    std::uint64_t prev_cell = 0;
    for (std::uint32_t f = 0; f <= fmax; ++f) {
      CommonOpts cell = o;
      cell.n = n;
      SweepCell sc = sweep_cell(to_bench(cell), f, seeds, 1000 + f, crash_prob);
      table << n << ',' << f << ',' << sc.max_rmr << ',' << sc.max_ff_rmr << ','
            << sc.rows.size() << "\n";
      if (calibration == 0 && f == 0) calibration = sc.max_rmr;
      if (f == 0) f0_column.push_back(sc.max_rmr);
      if (sc.max_rmr + 2 < prev_cell) monotone = false;  // empirical max, small slack
      prev_cell = std::max(prev_cell, sc.max_rmr);
      double logn = std::log2(double(n)) + 1.0;
      for (const MetricsRow& r : sc.rows) {
        double cap = calibration *
                     std::min({double(r.point_contention),
                               std::sqrt(double(r.failure_density) + 1.0), logn});
        if (double(r.rmr) > cap) envelope_ok = false;
      }
    }
  }
  bool f0_constant = true;
  for (std::uint64_t v : f0_column)
    if (v != f0_column.front()) f0_constant = false;
  std::cout << "wrote " << out_dir << "/gtable.csv; envelope "
            << (envelope_ok ? "ok" : "violated") << "; f0 column "
            << (f0_constant ? "constant" : "varies") << "; growth "
            << (monotone ? "monotone" : "non-monotone") << "\n";
  return envelope_ok ? kExitClean : kExitViolation;
}

int cmd_explore(const CommonOpts& o, std::uint32_t depth, std::uint32_t budget) {
  Bench b = make_bench(to_bench(o));
  ExploreCfg ec;
  ec.max_depth = depth;
  ec.crash_budget = budget;
  std::vector<StateCheck> checks{check_lock_state(b.top)};
  if (o.lock == "wr")
    checks.push_back(check_responsive_state(b.passage_programs, b.top_id));
  else
    checks.push_back(check_single_cs(b.passage_programs));
  ExploreResult r = explore(*b.sim, ec, checks);
  ordered_json out;
  out["lock"] = o.lock;
  out["n"] = o.n;
  out["depth"] = depth;
  out["crash_budget"] = budget;
  out["states"] = r.states;
  out["transitions"] = r.transitions;
  out["depth_exhausted"] = r.depth_exhausted;
  out["truncated"] = r.truncated;
  out["violation"] = r.violation;
  std::cout << out.dump(2) << "\n";
  return r.violation.empty() ? kExitClean : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic shared-memory lab for recoverable mutual exclusion"};
  app.set_config("--config");
  app.require_subcommand(1);

  CommonOpts opts;

  auto* runc = app.add_subcommand("run", "seeded simulation runs (histories + metrics)");
  add_common(runc, opts);
  std::uint32_t seeds = 1;
  std::uint64_t seed0 = 1;
  double crash_prob = 0.0;
  std::uint32_t budget = 2;
  std::string scenario;
  std::string out_dir = default_out();
  runc->add_option("--seeds", seeds, "number of seeded runs")->capture_default_str();
  runc->add_option("--seed0", seed0, "first seed")->capture_default_str();
  runc->add_option("--crash-prob", crash_prob, "per-turn crash probability")
      ->capture_default_str();
  runc->add_option("--crash-budget", budget, "crashes allowed per super-passage")
      ->capture_default_str();
  runc->add_option("--scenario", scenario,
                   "scripted scenario: crash-after-fas | escalate-<x>");
  runc->add_option("--out", out_dir, "output directory")->capture_default_str();

  auto* checkc = app.add_subcommand("check", "verify properties of saved histories");
  std::vector<std::string> files;
  bool print_rows = false;
  checkc->add_option("histories", files, "history files (.jsonl)")->required();
  checkc->add_flag("--metrics", print_rows, "also print per-passage metrics");

  auto* sweepc = app.add_subcommand("sweep", "g(n,F) complexity-profile table");
  add_common(sweepc, opts);
  std::vector<std::uint32_t> ns{4, 8, 16};
  std::uint32_t fmax = 12;
  std::uint32_t sweep_seeds = 40;
  double sweep_prob = 0.02;
  std::string sweep_out = default_out();
  sweepc->add_option("--ns", ns, "process counts")->capture_default_str();
  sweepc->add_option("--fmax", fmax, "largest injected-failure count")->capture_default_str();
  sweepc->add_option("--seeds", sweep_seeds, "seeds per cell")->capture_default_str();
  sweepc->add_option("--crash-prob", sweep_prob, "crash probability in failure cells")
      ->capture_default_str();
  sweepc->add_option("--out", sweep_out, "output directory")->capture_default_str();

  auto* explorec = app.add_subcommand("explore", "exhaustive small-instance exploration");
  add_common(explorec, opts);
  std::uint32_t depth = 50;
  std::uint32_t xbudget = 2;
  explorec->add_option("--depth", depth, "schedule depth bound")->capture_default_str();
  explorec->add_option("--budget", xbudget, "total crash budget")->capture_default_str();

  auto* replayc = app.add_subcommand("replay", "recompute verdicts from saved histories");
  std::vector<std::string> replay_files;
  replayc->add_option("histories", replay_files, "history files (.jsonl)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (runc->parsed())
      return cmd_run(opts, seeds, seed0, crash_prob, budget, scenario, out_dir);
    if (checkc->parsed()) return cmd_check(files, print_rows);
    if (sweepc->parsed())
      return cmd_sweep(opts, ns, fmax, sweep_seeds, sweep_prob, sweep_out);
    if (explorec->parsed()) return cmd_explore(opts, depth, xbudget);
    if (replayc->parsed()) return cmd_check(replay_files, false);
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const SimFault& e) {
    std::cerr << "violation: " << e.what() << "\n";
    return kExitViolation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
