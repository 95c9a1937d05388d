#ifndef RME_SCENARIO_HPP
#define RME_SCENARIO_HPP

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rme/composite.hpp"
#include "rme/program.hpp"
#include "rme/sim.hpp"

namespace rme {

// A fully wired simulation: one lock stack plus one passage program per
// process, ready to run or explore.
struct Bench {
  std::unique_ptr<Sim> sim;
  std::vector<std::unique_ptr<Program>> programs;
  std::vector<PassageProgram*> passage_programs;  // non-owning view, 1..n order
  RecoverableLock* top = nullptr;                 // non-owning
  LockId top_id = 0;
  WordId resource = 0;

  // stack-specific handles (null when not applicable)
  WrLock* wr = nullptr;
  SemiAdaptiveLock* semi = nullptr;
  SuperAdaptiveLock* super_lock = nullptr;
  TournamentLock* tournament = nullptr;
  Arbitrator* bare_arb = nullptr;
  ReclaimState* reclaim = nullptr;

  // keep-alives
  std::vector<std::unique_ptr<RecoverableLock>> owned_locks;
  std::unique_ptr<PlainAllocator> plain_alloc;
  WrLockMr mr;
};

struct BenchCfg {
  std::uint32_t n = 2;
  std::string stack = "wr";  // wr | semi | super | base | arb
  std::uint32_t levels = 0;  // super: 0 = default
  bool reclamation = false;
  RmrModel model{MemModel::DSM, true};
  std::uint32_t requests = 1;  // super-passages per process
};

Bench make_bench(const BenchCfg& cfg);

// Scripted adversary scenarios (the DERIVED-example generators).
// Each returns the finished history.
History scenario_crash_after_fas(std::uint32_t n, RmrModel model);

// Drive one process of a bench until a predicate over the sim holds.
// Returns false if the predicate never held within the step cap.
bool drive_until(Bench& b, Pid pid, const std::function<bool(const Sim&)>& pred,
                 std::uint32_t cap = 10000);

// Crash `pid` the moment its top-lock sensitive window opens, driving only it.
bool crash_in_sensitive_window(Bench& b, Pid pid, std::uint32_t cap = 10000);

// Escalation ladder: force `x_target` levels of a super-adaptive bench to be
// held so the last process enters at level x_target. Returns the history.
// Helper used by acceptance criterion 4 and the CLI scenario library.
History scenario_escalation(std::uint32_t x_target, std::uint32_t n, RmrModel model,
                            std::uint32_t levels);

}  // namespace rme

#endif
