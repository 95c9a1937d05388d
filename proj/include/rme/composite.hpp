#ifndef RME_COMPOSITE_HPP
#define RME_COMPOSITE_HPP

#include <memory>
#include <string>
#include <vector>

#include "rme/lock.hpp"
#include "rme/reclaim.hpp"
#include "rme/sim.hpp"
#include "rme/wrlock.hpp"

namespace rme {

// Dual-port (LEFT/RIGHT) strongly recoverable 2-process lock. Arbitration is
// a FAS on a single lockword: the previous value is either FREE (the caller
// holds the lock) or the current holder, in which case the caller spins on
// its own wake word and the holder's release performs the handoff. Per-port
// phase words persist progress for crash recovery. The contract is at most
// one concurrent acquirer per side; a violation faults.
class Arbitrator {
 public:
  enum Side : std::uint8_t { kLeft = 0, kRight = 1 };

  Arbitrator(Sim& sim, const std::string& name, Pid home = 1);

  bool acquire_step(Sim& sim, Pid pid, Side s);
  bool release_step(Sim& sim, Pid pid, Side s);
  void on_crash(Pid pid);
  void save(Buf& out) const;
  void load(BufReader& in);
  void check_invariants(const Sim& sim) const;

  LockId port_id(Side s) const { return port_id_[s]; }
  bool holds(const Sim& sim, Pid pid, Side s) const;

 private:
  struct Priv {
    std::uint8_t pc = 0;
    Word t0 = 0;
    Word tag = 0;
  };

  Word holder_tag(Pid pid, Side s) const { return (Word(s + 1) << 48) | pid; }

  LockId port_id_[2];
  WordId lockword_;
  WordId phase_[2];
  WordId slot_[2];
  std::vector<WordId> wake_;
  std::vector<WordId> aseq_;
  std::vector<Priv> priv_;
  std::uint32_t n_;
};

// filter -> splitter -> {fast | core} -> arbitrator composition. The fast
// path is a CAS-claimed word x; the persisted type[i] word lets a crashed
// process retrace its path. Exit releases in reverse order of acquisition
// and destroys the retrace witnesses type-first so at most one process can
// ever claim the fast path.
class SemiAdaptiveLock : public RecoverableLock {
 public:
  SemiAdaptiveLock(Sim& sim, const std::string& name, std::uint32_t level,
                   RecoverableLock* core, bool mr_filter);

  LockId id() const override { return id_; }
  StepRet step(Sim& sim, Pid pid, Segment seg) override;
  void on_crash(Pid pid) override;
  void collect_sensitive(Pid pid, std::vector<LockId>& out) const override;
  StepBounds bounds() const override;
  void check_invariants(const Sim& sim) const override;
  void save(Buf& out) const override;
  void load(BufReader& in) override;

  WrLock* filter() { return filter_.get(); }
  Arbitrator* arbitrator() { return arb_.get(); }
  WordId x_word() const { return x_; }
  WordId type_word(Pid p) const { return type_.at(p); }

  enum PathType : Word { kNone = 0, kFast = 1, kSlow = 2 };

 private:
  struct Priv {
    std::uint32_t pc = 0;
    Word path = kNone;
  };

  LockId id_;
  std::uint32_t n_;
  RecoverableLock* core_;
  WrLockMr mr_;                       // set when mr_filter
  std::unique_ptr<PlainAllocator> plain_;
  std::unique_ptr<WrLock> filter_;
  std::unique_ptr<Arbitrator> arb_;
  WordId x_;
  std::vector<WordId> type_;
  std::vector<Priv> priv_;
};

// Binary tree of arbitrators, one leaf slot per process; the per-process
// persisted position word records how many levels are held.
class TournamentLock : public RecoverableLock {
 public:
  TournamentLock(Sim& sim, const std::string& name, std::uint32_t level_tag = 0);

  LockId id() const override { return id_; }
  StepRet step(Sim& sim, Pid pid, Segment seg) override;
  void on_crash(Pid pid) override;
  void collect_sensitive(Pid, std::vector<LockId>&) const override {}
  StepBounds bounds() const override;
  void check_invariants(const Sim& sim) const override;
  void save(Buf& out) const override;
  void load(BufReader& in) override;

  std::uint32_t depth() const { return depth_; }

 private:
  struct Priv {
    std::uint32_t pc = 0;
    std::uint32_t level = 0;
  };

  Arbitrator* arb_at(std::uint32_t level, Pid pid);
  Arbitrator::Side side_at(std::uint32_t level, Pid pid) const;

  LockId id_;
  std::uint32_t n_;
  std::uint32_t depth_;
  std::vector<std::vector<std::unique_ptr<Arbitrator>>> arbs_;  // [level][node]
  std::vector<WordId> pos_;
  std::vector<Priv> priv_;
};

// Recursive super-adaptive lock: level i's slow path enters level i+1;
// the deepest level's core is the pluggable base lock.
class SuperAdaptiveLock : public RecoverableLock {
 public:
  struct Config {
    std::uint32_t levels = 0;  // 0: default ceil(log2(n+1))
    bool reclamation = false;
    RecoverableLock* base = nullptr;  // nullptr: build a tournament base
  };

  SuperAdaptiveLock(Sim& sim, const std::string& name, const Config& cfg);

  LockId id() const override { return top_->id(); }
  StepRet step(Sim& sim, Pid pid, Segment seg) override { return top_->step(sim, pid, seg); }
  void on_crash(Pid pid) override { top_->on_crash(pid); }
  void collect_sensitive(Pid pid, std::vector<LockId>& out) const override {
    top_->collect_sensitive(pid, out);
  }
  StepBounds bounds() const override { return top_->bounds(); }
  void check_invariants(const Sim& sim) const override;
  void save(Buf& out) const override { top_->save(out); }
  void load(BufReader& in) override { top_->load(in); }

  std::uint32_t levels() const { return static_cast<std::uint32_t>(levels_.size()); }
  SemiAdaptiveLock* level(std::uint32_t i) { return levels_.at(i - 1).get(); }  // 1-based
  TournamentLock* base() { return owned_base_.get(); }

 private:
  std::vector<std::unique_ptr<SemiAdaptiveLock>> levels_;
  std::unique_ptr<TournamentLock> owned_base_;
  SemiAdaptiveLock* top_ = nullptr;
};

std::uint32_t default_levels(std::uint32_t n);

}  // namespace rme

#endif
