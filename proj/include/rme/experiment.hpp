#ifndef RME_EXPERIMENT_HPP
#define RME_EXPERIMENT_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "rme/checker.hpp"
#include "rme/scenario.hpp"

namespace rme {

struct RunCfg {
  BenchCfg bench;
  std::uint64_t seed = 1;
  double crash_prob = 0.0;
  std::uint32_t crash_budget_per_sp = 2;
  std::uint32_t total_crash_budget = ~0u;
  std::uint64_t max_steps = 400000;
};

struct SeededRun {
  History history;
  RunStatus status = RunStatus::Completed;
};

SeededRun run_seeded(const RunCfg& cfg);

// One sweep cell: fixed n, exactly `failures` crashes injected (budget),
// `seeds` runs; rows aggregate every passage of every run.
struct SweepCell {
  std::uint32_t n = 0;
  std::uint32_t failures = 0;
  std::uint64_t max_rmr = 0;               // over all passages in the cell
  std::uint64_t max_ff_rmr = 0;            // over failure-free passages
  std::vector<MetricsRow> rows;
};

SweepCell sweep_cell(const BenchCfg& base, std::uint32_t failures, std::uint32_t seeds,
                     std::uint64_t seed0, double crash_prob);

void write_metrics_csv(const std::vector<MetricsRow>& rows, std::uint64_t seed, std::ostream& os);
void write_metrics_csv_header(std::ostream& os);

}  // namespace rme

#endif
