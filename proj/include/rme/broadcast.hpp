#ifndef RME_BROADCAST_HPP
#define RME_BROADCAST_HPP

#include <string>
#include <vector>

#include "rme/sim.hpp"

namespace rme {

// Recoverable MRSW counter: the owner publishes monotonically increasing
// values, non-owners block until the counter reaches their argument. All
// operations are resumable machines (at most one instruction per call, true
// when finished) and idempotent under re-invocation with the same argument.
class BroadcastCounter {
 public:
  virtual ~BroadcastCounter() = default;
  virtual bool set_step(Sim& sim, Pid pid, Word x) = 0;
  virtual bool wait_step(Sim& sim, Pid pid, Word x) = 0;
  virtual bool read_step(Sim& sim, Pid pid, Word& out) = 0;
  virtual Word peek(const Sim& sim) const = 0;  // checker-side, not an instruction
  virtual Pid owner() const = 0;
  virtual void on_crash(Pid pid) = 0;
  virtual void save(Buf& out) const = 0;
  virtual void load(BufReader& in) = 0;
};

// Single shared word; waiters spin on it. The well-formedness rules bound the
// number of writes a waiting process can observe, so the spin is O(1) RMR
// under CC.
class BroadcastCC : public BroadcastCounter {
 public:
  BroadcastCC(Sim& sim, Pid owner);

  bool set_step(Sim& sim, Pid pid, Word x) override;
  bool wait_step(Sim& sim, Pid pid, Word x) override;
  bool read_step(Sim& sim, Pid pid, Word& out) override;
  Word peek(const Sim& sim) const override { return sim.mem().peek(count_); }
  Pid owner() const override { return owner_; }
  void on_crash(Pid pid) override { pcs_.at(pid) = 0; }
  void save(Buf& out) const override;
  void load(BufReader& in) override;

 private:
  Pid owner_;
  WordId count_;
  std::vector<std::uint8_t> pcs_;  // per-pid micro-pc
};

// Wake-up-chain algorithm: the owner chains announced waiters in descending
// id order, each confirmed waiter wakes at most one other, and every waiter
// spins only on its own target word. If the confirmation re-read shows a
// waiter already departed, the owner takes over that wake itself (one extra
// remote CAS per concurrently departing waiter).
class BroadcastDSM : public BroadcastCounter {
 public:
  BroadcastDSM(Sim& sim, Pid owner);

  bool set_step(Sim& sim, Pid pid, Word x) override;
  bool wait_step(Sim& sim, Pid pid, Word x) override;
  bool read_step(Sim& sim, Pid pid, Word& out) override;
  Word peek(const Sim& sim) const override { return sim.mem().peek(b_); }
  Pid owner() const override { return owner_; }
  void on_crash(Pid pid) override;
  void save(Buf& out) const override;
  void load(BufReader& in) override;

  WordId a_word() const { return a_; }
  WordId b_word() const { return b_; }
  WordId target_word(Pid p) const { return target_.at(p); }

 private:
  struct Priv {
    std::uint8_t pc = 0;
    std::uint32_t j = 0;      // scan cursor (owner)
    std::uint32_t prev = 0;   // last confirmed chain member (owner)
    std::uint32_t wake_n = 0;
    std::uint32_t wake_i = 0;
    std::uint32_t wake[33] = {0};  // chain head plus orphaned waiters
    Word k = 0;               // forward target (waiter)
  };

  Pid owner_;
  std::uint32_t n_;
  WordId a_, b_;
  std::vector<WordId> announce_, wakeup_, target_;
  std::vector<Priv> priv_;
};

BroadcastCounter* make_broadcast(Sim& sim, Pid owner, std::vector<std::unique_ptr<BroadcastCounter>>& pool);

}  // namespace rme

#endif
