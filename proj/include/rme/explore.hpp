#ifndef RME_EXPLORE_HPP
#define RME_EXPLORE_HPP

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "rme/program.hpp"
#include "rme/sim.hpp"

namespace rme {

struct ExploreCfg {
  std::uint32_t max_depth = 50;
  std::uint32_t crash_budget = 0;   // total crashes across the exploration path
  std::uint32_t crash_pid_mask = ~0u;  // bit p-1: process p may crash
  std::uint64_t max_states = 20'000'000;
  bool collect_states = false;      // keep canonical states (oracle comparisons)
};

struct ExploreResult {
  std::uint64_t states = 0;
  std::uint64_t transitions = 0;
  bool depth_exhausted = false;
  bool truncated = false;
  std::string violation;  // empty when clean
  std::set<std::string> collected;
};

using StateCheck = std::function<void(const Sim&)>;  // throws SimFault on violation

// Depth-first enumeration of every schedule and crash placement, with
// memoization on exact machine state. Every visited state runs the checks.
ExploreResult explore(Sim& sim, const ExploreCfg& cfg, const std::vector<StateCheck>& checks);

// Independent oracle: plain recursive interleaver with no memoization.
std::set<std::string> naive_enumerate(Sim& sim, std::uint32_t depth, std::uint32_t crash_budget);

// common predicates
StateCheck check_single_cs(const std::vector<PassageProgram*>& progs);
StateCheck check_responsive_state(const std::vector<PassageProgram*>& progs, LockId wr_lock);
StateCheck check_lock_state(RecoverableLock* lock);

}  // namespace rme

#endif
