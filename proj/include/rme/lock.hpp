#ifndef RME_LOCK_HPP
#define RME_LOCK_HPP

#include <vector>

#include "rme/types.hpp"

namespace rme {

class Sim;

enum class Segment : std::uint8_t { Recover, Enter, Exit };

struct StepRet {
  bool done = false;
  bool doorway = false;  // set on the turn the lock's doorway completes
};

struct StepBounds {
  std::uint32_t recover = 0;  // max own instruction events in any Recover
  std::uint32_t exit = 0;     // max own instruction events in any Exit
  std::uint32_t reenter = 0;  // max own Enter instructions after a crash in CS
};

// A recoverable lock expressed as a resumable per-process step machine.
// step() performs at most one shared-memory instruction per call and may emit
// markers; it is called repeatedly until it reports done. Private state is a
// deterministic function of (private state, last results); a crash wipes it.
class RecoverableLock {
 public:
  virtual ~RecoverableLock() = default;

  virtual LockId id() const = 0;
  virtual StepRet step(Sim& sim, Pid pid, Segment seg) = 0;
  virtual void on_crash(Pid pid) = 0;

  // True while a crash immediately after the last executed instruction would
  // be unsafe with respect to this lock (composite locks include children).
  virtual void collect_sensitive(Pid pid, std::vector<LockId>& out) const = 0;

  virtual StepBounds bounds() const = 0;

  // In-state safety predicates for the exhaustive explorer.
  virtual void check_invariants(const Sim& sim) const { (void)sim; }

  // Exact snapshot of per-process private state (explorer backtracking).
  virtual void save(Buf& out) const = 0;
  virtual void load(BufReader& in) = 0;
};

}  // namespace rme

#endif
