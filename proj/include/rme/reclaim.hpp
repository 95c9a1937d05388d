#ifndef RME_RECLAIM_HPP
#define RME_RECLAIM_HPP

#include <memory>
#include <vector>

#include "rme/broadcast.hpp"
#include "rme/sim.hpp"
#include "rme/wrlock.hpp"

namespace rme {

// Bounded-space node allocation for WR-Lock. Each process owns two pools of
// 3n+2 nodes; a monotone stride counter indexes the active pool (the pool
// designation is the cycle parity, so advancing the counter is the only
// write a stride commits). The allowance-period-termination-detection
// routine runs one stride at a time: n snapshot strides, n catch-up strides
// on the checkpoint counters, n yield strides on the finish counters, and
// two switch strides. When the counter crosses a cycle boundary the pool
// that just finished its backup cycle is reclaimed: slot generations bump
// and the words are poisoned until the next hand-out re-arms them.
class ReclaimState {
 public:
  ReclaimState(Sim& sim, std::uint32_t n);

  std::uint32_t pool_size() const { return pool_size_; }

  // counter values as completed Set()s would report them
  Word start_value(const Sim& sim, Pid p) const;
  Word checkpoint_value(const Sim& sim, Pid p) const;
  Word finish_value(const Sim& sim, Pid p) const;

  // start-1 <= finish <= checkpoint <= start, for every process
  bool counters_invariant(const Sim& sim) const;

  std::uint32_t live_nodes(const Sim& sim) const;  // handed out and not yet reclaimed

  friend class MrHooks;

 private:
  std::uint32_t n_;
  std::uint32_t pool_size_;
  std::vector<WordId> start_, stride_, recorded_, pen_flag_, pen_snap_;
  std::vector<std::vector<WordId>> snap_;  // [pid][j]
  std::vector<std::unique_ptr<BroadcastCounter>> objects_;
  std::vector<BroadcastCounter*> checkpoint_, finish_;
  std::vector<std::vector<std::uint32_t>> pool_;  // [pid][2 * pool_size] node indices
  std::vector<std::uint32_t> handed_out_;         // slot index + 1 while an attempt holds it
};

// WR-Lock hooks backed by a ReclaimState: penalty stride and attempt opening
// before the doorway, checkpoint catch-up after it, exactly one regular
// stride per attempt, and the retire bookkeeping that closes an attempt.
class MrHooks : public WrHooks {
 public:
  MrHooks(ReclaimState* st, std::uint32_t n) : st_(st), n_(n), priv_(n + 1) {}

  bool pre_doorway(Sim& sim, Pid pid) override;
  bool get_node(Sim& sim, Pid pid, Word& out) override;
  bool post_doorway(Sim& sim, Pid pid) override;
  bool regular_stride(Sim& sim, Pid pid) override;
  bool retire(Sim& sim, Pid pid, bool useless) override;
  void on_crash(Pid pid) override;
  void save(Buf& out) const override;
  void load(BufReader& in) override;

 private:
  bool stride_step(Sim& sim, Pid pid);  // ExecuteOneStride

  struct Priv {
    std::uint8_t pc = 0;       // hook machine pc
    std::uint8_t spc = 0;      // stride machine pc
    Word t0 = 0, t1 = 0;       // temporaries
    Word stride_k = 0;         // stride counter value for the current stride
  };

  ReclaimState* st_;
  std::uint32_t n_;
  std::vector<Priv> priv_;
};

// Convenience bundle: a WR-Lock with bounded-space allocation.
struct WrLockMr {
  std::unique_ptr<ReclaimState> state;
  std::unique_ptr<MrHooks> hooks;
  std::unique_ptr<WrLock> lock;
};
WrLockMr make_wrlock_mr(Sim& sim, const std::string& name, std::uint32_t level = 0);

}  // namespace rme

#endif
