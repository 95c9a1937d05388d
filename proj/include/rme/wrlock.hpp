#ifndef RME_WRLOCK_HPP
#define RME_WRLOCK_HPP

#include <string>
#include <vector>

#include "rme/lock.hpp"
#include "rme/sim.hpp"

namespace rme {

// Allocation hooks interleaved with WR-Lock's segments. The plain hooks leak
// retired nodes (the unbounded-space variant); the reclamation layer supplies
// pool-backed ones. Every hook is a resumable machine: it performs at most
// one instruction per call and returns true when finished.
class WrHooks {
 public:
  virtual ~WrHooks() = default;
  virtual bool pre_doorway(Sim&, Pid) { return true; }
  virtual bool get_node(Sim& sim, Pid pid, Word& out) = 0;
  virtual bool post_doorway(Sim&, Pid) { return true; }
  virtual bool regular_stride(Sim&, Pid) { return true; }
  virtual bool retire(Sim&, Pid, bool useless) = 0;
  virtual void on_crash(Pid) {}
  virtual void save(Buf&) const {}
  virtual void load(BufReader&) {}
};

class PlainAllocator : public WrHooks {
 public:
  bool get_node(Sim& sim, Pid pid, Word& out) override {
    out = sim.nodes().create(sim.mem(), pid);
    sim.local();
    return true;
  }
  bool retire(Sim&, Pid, bool) override { return true; }  // retired nodes leak
};

// The weakly recoverable MCS-variant queue lock. One FAS appends the node;
// persisting the returned predecessor closes the sensitive window; exit
// relieves the node by CAS-ing its next field to the LOCKED sentinel or by
// clearing the successor's spin flag. A crash between the FAS and the persist
// abandons the attempt: recovery relieves the orphaned node, retires it and
// resets to a fresh attempt.
class WrLock : public RecoverableLock {
 public:
  WrLock(Sim& sim, const std::string& name, WrHooks* hooks, Pid home = 1,
         std::uint32_t level = 0);

  LockId id() const override { return id_; }
  StepRet step(Sim& sim, Pid pid, Segment seg) override;
  void on_crash(Pid pid) override;
  void collect_sensitive(Pid pid, std::vector<LockId>& out) const override;
  StepBounds bounds() const override { return StepBounds{24, 24, 8}; }
  void check_invariants(const Sim& sim) const override;
  void save(Buf& out) const override;
  void load(BufReader& in) override;

  WordId tail_word() const { return tail_; }
  WordId state_word(Pid p) const { return state_.at(p); }
  WordId pred_word(Pid p) const { return pred_.at(p); }
  WordId mine_word(Pid p) const { return mine_.at(p); }
  bool holder_state(const Sim& sim, Pid p) const;  // state[p] == InCS

  // number of processes whose state word reads InCS (explorer predicate)
  std::uint32_t in_cs_count(const Sim& sim) const;

  enum State : Word { kFree = 0, kTryEnter = 1, kInCs = 2, kExiting = 3, kRelieved = 4 };

 private:
  struct Priv {
    std::uint32_t pc = 0;
    Word node = 0;
    Word pred = 0;
    Word tmp = 0;
  };

  LockId id_;
  WrHooks* hooks_;
  std::uint32_t n_;
  WordId tail_;
  std::vector<WordId> state_, mine_, pred_;  // indexed by pid
  std::vector<Priv> priv_;
};

}  // namespace rme

#endif
