#ifndef RME_PROGRAM_HPP
#define RME_PROGRAM_HPP

#include "rme/sim.hpp"

namespace rme {

// NCS -> Recover -> Enter -> CS -> Exit loop over one top-level lock.
// The CS body writes a shared resource word (so overlapping critical sections
// touch real state); a crashed process restarts from the top of NCS and keeps
// its outstanding request until a failure-free passage completes.
class PassageProgram : public Program {
 public:
  PassageProgram(RecoverableLock* lock, LockId lock_id, WordId resource, std::uint32_t requests)
      : lock_(lock), lock_id_(lock_id), resource_(resource), requests_(requests) {}

  bool turn(Sim& sim, Pid pid) override;
  void on_crash(Sim& sim, Pid pid) override;
  bool finished(const Sim& sim, Pid pid) const override;
  void save(Buf& out) const override;
  void load(BufReader& in) override;

  // 1-based id of the super-passage currently in progress, 0 if none.
  std::uint32_t current_sp(Pid) const { return sp_counter_; }
  bool in_cs() const { return phase_ == Phase::Cs; }

 private:
  enum class Phase : std::uint8_t { Parked, Ncs, Recover, Enter, Cs, Exit };

  RecoverableLock* lock_;
  LockId lock_id_;
  WordId resource_;
  std::uint32_t requests_;

  Phase phase_ = Phase::Parked;
  std::uint32_t done_requests_ = 0;
  std::uint32_t sp_counter_ = 0;
  std::uint8_t crashed_this_passage_ = 0;
  std::uint8_t cs_step_ = 0;
  std::uint8_t bcsr_pending_ = 0;  // crashed inside the CS, not yet re-entered
  std::uint32_t seg_steps_ = 0;    // instruction events in the current segment
};

}  // namespace rme

#endif
