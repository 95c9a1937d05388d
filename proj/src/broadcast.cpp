#include "rme/broadcast.hpp"

namespace rme {

// -- CC variant --------------------------------------------------------------

BroadcastCC::BroadcastCC(Sim& sim, Pid owner) : owner_(owner), pcs_(sim.n() + 1, 0) {
  count_ = sim.alloc_word(owner, 0);
}

bool BroadcastCC::set_step(Sim& sim, Pid pid, Word x) {
  if (pid != owner_) throw SimFault("broadcast: Set by non-owner");
  if (x > sim.mem().peek(count_) + 1)
    throw SimFault("broadcast: Set argument jumps by more than one");
  std::uint8_t& pc = pcs_.at(pid);
  if (pc == 0) {
    Word c = sim.read(count_);
    if (c >= x) return true;
    pc = 1;
    return false;
  }
  sim.write(count_, x);
  pc = 0;
  return true;
}

bool BroadcastCC::wait_step(Sim& sim, Pid pid, Word x) {
  if (pid == owner_) throw SimFault("broadcast: Wait by owner");
  if (x > sim.mem().peek(count_) + 1)
    throw SimFault("broadcast: Wait argument not close to the last Set");
  Word c = sim.read(count_);
  return c >= x;
}

bool BroadcastCC::read_step(Sim& sim, Pid, Word& out) {
  out = sim.read(count_);
  return true;
}

void BroadcastCC::save(Buf& out) const {
  for (std::uint8_t pc : pcs_) out.u8(pc);
}
void BroadcastCC::load(BufReader& in) {
  for (std::uint8_t& pc : pcs_) pc = in.u8();
}

// -- DSM variant ---------------------------------------------------------------

namespace {
enum SetPc : std::uint8_t { S_A = 0, S_SCAN, S_LINK, S_CONFIRM, S_WAKE, S_B };
enum WaitPc : std::uint8_t { W_TARGET = 0, W_ANNOUNCE, W_READ_A, W_SELF, W_SPIN, W_CLEAR, W_WAKEUP, W_FWD };
}  // namespace

BroadcastDSM::BroadcastDSM(Sim& sim, Pid owner)
    : owner_(owner), n_(sim.n()), priv_(sim.n() + 1) {
  a_ = sim.alloc_word(owner, 0);
  b_ = sim.alloc_word(owner, 0);
  announce_.resize(n_ + 1);
  wakeup_.resize(n_ + 1);
  target_.resize(n_ + 1);
  for (Pid p = 1; p <= n_; ++p) {
    announce_[p] = sim.alloc_word(owner, 0);
    wakeup_[p] = sim.alloc_word(owner, 0);
    target_[p] = sim.alloc_word(p, 0);
  }
}

bool BroadcastDSM::set_step(Sim& sim, Pid pid, Word x) {
  if (pid != owner_) throw SimFault("broadcast: Set by non-owner");
  if (x > sim.mem().peek(a_) + 1)
    throw SimFault("broadcast: Set argument jumps by more than one");
  Priv& pv = priv_.at(pid);
  switch (pv.pc) {
    case S_A:
      sim.write(a_, x);
      pv.j = n_;
      pv.prev = 0;
      pv.wake_n = 0;
      pv.wake_i = 0;
      pv.pc = S_SCAN;
      return false;

    case S_SCAN: {
      while (pv.j >= 1 && pv.j == owner_) pv.j--;
      if (pv.j == 0) {
        pv.pc = S_WAKE;
        return false;
      }
      Word a = sim.read(announce_[pv.j]);
      if (a == x) {
        if (pv.prev == 0) {
          // highest-id member heads the chain; the owner wakes it directly
          pv.wake[pv.wake_n++] = pv.j;
          pv.prev = pv.j;
          pv.j--;
        } else {
          pv.pc = S_LINK;
        }
      } else {
        pv.j--;
      }
      return false;
    }

    case S_LINK:
      sim.write(wakeup_[pv.prev], pv.j);
      pv.pc = S_CONFIRM;
      return false;

    case S_CONFIRM: {
      // re-read announce[prev]: if prev already stopped waiting it may have
      // missed the wakeup assignment, so the owner adopts its duty
      Word a2 = sim.read(announce_[pv.prev]);
      if (a2 != x) pv.wake[pv.wake_n++] = pv.j;
      pv.prev = pv.j;
      pv.j--;
      pv.pc = S_SCAN;
      return false;
    }

    case S_WAKE:
      if (pv.wake_i < pv.wake_n) {
        sim.cas(target_[pv.wake[pv.wake_i]], x, 0);
        pv.wake_i++;
        return false;
      }
      pv.pc = S_B;
      return false;

    case S_B:
      sim.write(b_, x);
      pv.pc = S_A;
      return true;
  }
  return true;
}

bool BroadcastDSM::wait_step(Sim& sim, Pid pid, Word x) {
  if (pid == owner_) throw SimFault("broadcast: Wait by owner");
  if (x > sim.mem().peek(a_) + 1)
    throw SimFault("broadcast: Wait argument not close to the last Set");
  Priv& pv = priv_.at(pid);
  switch (pv.pc) {
    case W_TARGET:
      sim.write(target_[pid], x);
      pv.pc = W_ANNOUNCE;
      return false;
    case W_ANNOUNCE:
      sim.write(announce_[pid], x);
      pv.pc = W_READ_A;
      return false;
    case W_READ_A: {
      Word a = sim.read(a_);
      pv.pc = a >= x ? W_SELF : W_SPIN;
      return false;
    }
    case W_SELF:
      sim.write(target_[pid], 0);
      pv.pc = W_SPIN;
      return false;
    case W_SPIN: {
      Word t = sim.read(target_[pid]);
      if (t == 0) pv.pc = W_CLEAR;
      return false;
    }
    case W_CLEAR:
      sim.write(announce_[pid], 0);
      pv.pc = W_WAKEUP;
      return false;
    case W_WAKEUP:
      pv.k = sim.read(wakeup_[pid]);
      if (pv.k == 0) {
        pv.pc = W_TARGET;
        return true;
      }
      pv.pc = W_FWD;
      return false;
    case W_FWD:
      sim.cas(target_[static_cast<Pid>(pv.k)], x, 0);
      pv.pc = W_TARGET;
      return true;
  }
  return true;
}

bool BroadcastDSM::read_step(Sim& sim, Pid, Word& out) {
  out = sim.read(b_);
  return true;
}

void BroadcastDSM::on_crash(Pid pid) { priv_.at(pid) = Priv{}; }

void BroadcastDSM::save(Buf& out) const {
  for (const Priv& pv : priv_) {
    out.u8(pv.pc);
    out.u32(pv.j);
    out.u32(pv.prev);
    out.u32(pv.wake_n);
    out.u32(pv.wake_i);
    for (std::uint32_t w : pv.wake) out.u32(w);
    out.u64(pv.k);
  }
}

void BroadcastDSM::load(BufReader& in) {
  for (Priv& pv : priv_) {
    pv.pc = in.u8();
    pv.j = in.u32();
    pv.prev = in.u32();
    pv.wake_n = in.u32();
    pv.wake_i = in.u32();
    for (std::uint32_t& w : pv.wake) w = in.u32();
    pv.k = in.u64();
  }
}

BroadcastCounter* make_broadcast(Sim& sim, Pid owner,
                                 std::vector<std::unique_ptr<BroadcastCounter>>& pool) {
  if (sim.mem().model().kind == MemModel::CC)
    pool.push_back(std::make_unique<BroadcastCC>(sim, owner));
  else
    pool.push_back(std::make_unique<BroadcastDSM>(sim, owner));
  return pool.back().get();
}

}  // namespace rme
