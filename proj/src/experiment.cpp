#include "rme/experiment.hpp"

#include <ostream>

namespace rme {

SeededRun run_seeded(const RunCfg& cfg) {
  Bench b = make_bench(cfg.bench);
  b.sim->set_seed_note(cfg.seed);
  SchedulerCfg sched;
  sched.seed = cfg.seed;
  sched.crash_prob = cfg.crash_prob;
  sched.crash_budget_per_sp = cfg.crash_budget_per_sp;
  sched.total_crash_budget = cfg.total_crash_budget;
  RunLimits limits;
  limits.max_steps = cfg.max_steps;
  RunResult r = run(*b.sim, sched, limits);
  SeededRun out;
  out.status = r.status;
  out.history = b.sim->history();
  return out;
}

SweepCell sweep_cell(const BenchCfg& base, std::uint32_t failures, std::uint32_t seeds,
                     std::uint64_t seed0, double crash_prob) {
  SweepCell cell;
  cell.n = base.n;
  cell.failures = failures;
  for (std::uint32_t s = 0; s < seeds; ++s) {
    RunCfg rc;
    rc.bench = base;
    rc.seed = seed0 + s;
    rc.crash_prob = failures == 0 ? 0.0 : crash_prob;
    rc.total_crash_budget = failures;
    rc.crash_budget_per_sp = failures;
    SeededRun run = run_seeded(rc);
    LockId top = run.history.locks.empty() ? 1 : run.history.locks.front().id;
    // top lock is the first registered with the stack's kind; find by name
    for (const LockInfo& li : run.history.locks)
      if (li.name == "wr" || li.name == "semi" || li.name == "super.L1" || li.name == "base")
        top = li.id;
    std::vector<MetricsRow> rows = metrics(run.history, top);
    for (const MetricsRow& r : rows) {
      cell.max_rmr = std::max(cell.max_rmr, r.rmr);
      if (r.failure_free) cell.max_ff_rmr = std::max(cell.max_ff_rmr, r.rmr);
      cell.rows.push_back(r);
    }
  }
  return cell;
}

void write_metrics_csv_header(std::ostream& os) {
  os << "seed,pid,sp,passage,failure_free,deepest_level,rmr,failure_density,point_contention\n";
}

void write_metrics_csv(const std::vector<MetricsRow>& rows, std::uint64_t seed, std::ostream& os) {
  for (const MetricsRow& r : rows) {
    os << seed << ',' << r.pid << ',' << r.sp << ',' << r.passage << ','
       << (r.failure_free ? 1 : 0) << ',' << r.deepest_level << ',' << r.rmr << ','
       << r.failure_density << ',' << r.point_contention << "\n";
  }
}

}  // namespace rme
