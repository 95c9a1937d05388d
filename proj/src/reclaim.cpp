#include "rme/reclaim.hpp"

#include <cassert>

namespace rme {

ReclaimState::ReclaimState(Sim& sim, std::uint32_t n) : n_(n), pool_size_(3 * n + 2) {
  start_.resize(n + 1);
  stride_.resize(n + 1);
  recorded_.resize(n + 1);
  pen_flag_.resize(n + 1);
  pen_snap_.resize(n + 1);
  snap_.resize(n + 1);
  checkpoint_.resize(n + 1);
  finish_.resize(n + 1);
  pool_.resize(n + 1);
  handed_out_.resize(n + 1, 0);
  for (Pid p = 1; p <= n; ++p) {
    start_[p] = sim.alloc_word(p, 0);
    stride_[p] = sim.alloc_word(p, 0);
    recorded_[p] = sim.alloc_word(p, 0);
    pen_flag_[p] = sim.alloc_word(p, 0);
    pen_snap_[p] = sim.alloc_word(p, 0);
    snap_[p].resize(n);
    for (std::uint32_t j = 0; j < n; ++j) snap_[p][j] = sim.alloc_word(p, 0);
    checkpoint_[p] = make_broadcast(sim, p, objects_);
    finish_[p] = make_broadcast(sim, p, objects_);
    pool_[p].resize(2 * pool_size_);
    for (std::uint32_t k = 0; k < 2 * pool_size_; ++k) {
      Word ref = sim.nodes().create(sim.mem(), p);
      pool_[p][k] = node_index(ref);
    }
  }
}

Word ReclaimState::start_value(const Sim& sim, Pid p) const {
  return sim.mem().peek(start_[p]);
}
Word ReclaimState::checkpoint_value(const Sim& sim, Pid p) const {
  return checkpoint_[p]->peek(sim);
}
Word ReclaimState::finish_value(const Sim& sim, Pid p) const {
  return finish_[p]->peek(sim);
}

bool ReclaimState::counters_invariant(const Sim& sim) const {
  for (Pid p = 1; p <= n_; ++p) {
    Word s = start_value(sim, p);
    Word c = checkpoint_value(sim, p);
    Word f = finish_value(sim, p);
    if (!(f <= c && c <= s && s <= f + 1)) return false;
  }
  return true;
}

std::uint32_t ReclaimState::live_nodes(const Sim& sim) const {
  std::uint32_t live = 0;
  for (Pid p = 1; p <= n_; ++p)
    for (std::uint32_t idx : pool_[p]) {
      const auto& nd = sim.nodes().at(idx);
      if (!sim.mem().freed(nd.next)) live++;
    }
  return live;
}

// -- MrHooks ------------------------------------------------------------------

namespace {
// hook machine pcs
enum HookPc : std::uint8_t {
  H_IDLE = 0,
  // pre_doorway
  P_PEN0,
  P_PEN1,
  P_PEN2,
  P_PEN_STRIDE,
  P_PEN_CLR,
  P_Q0,
  P_Q1,
  P_REC0,
  P_REC1,
  P_INC,
  // get_node
  G0,
  G1,
  G2,
  // post_doorway (checkpoint catch-up)
  C0,
  C1,
  C2,
  // regular stride
  D0,
  D1,
  D2,
  // retire
  T_PEN0,
  T_PEN1,
  T_PEN2,
  T_CNT0,
  T_CNT1,
  T_CNT2,
  T_CNT3,
  T_FIN,
};

// stride machine pcs
enum StridePc : std::uint8_t {
  ST_READ = 0,
  ST_SNAP_READ,
  ST_SNAP_WRITE,
  ST_CATCHUP_SNAP,
  ST_CATCHUP_WAIT,
  ST_YIELD_SNAP,
  ST_YIELD_WAIT,
  ST_SWITCH_NOOP,
  ST_ADV,
};
}  // namespace

// One stride of the APTD routine. Re-execution with an unchanged stride
// counter is harmless; the counter advance is the stride's commit point.
bool MrHooks::stride_step(Sim& sim, Pid pid) {
  Priv& pv = priv_.at(pid);
  const std::uint32_t P = st_->pool_size_;
  switch (pv.spc) {
    case ST_READ: {
      pv.stride_k = sim.read(st_->stride_[pid]);
      std::uint32_t k = static_cast<std::uint32_t>(pv.stride_k % P);
      if (k < n_)
        pv.spc = ST_SNAP_READ;
      else if (k < 2 * n_)
        pv.spc = ST_CATCHUP_SNAP;
      else if (k < 3 * n_)
        pv.spc = ST_YIELD_SNAP;
      else
        pv.spc = ST_SWITCH_NOOP;
      return false;
    }
    case ST_SNAP_READ: {
      std::uint32_t j = static_cast<std::uint32_t>(pv.stride_k % P);  // 0..n-1
      pv.t0 = sim.read(st_->start_[j + 1]);
      pv.spc = ST_SNAP_WRITE;
      return false;
    }
    case ST_SNAP_WRITE: {
      std::uint32_t j = static_cast<std::uint32_t>(pv.stride_k % P);
      sim.write(st_->snap_[pid][j], pv.t0);
      pv.spc = ST_ADV;
      return false;
    }
    case ST_CATCHUP_SNAP: {
      std::uint32_t j = static_cast<std::uint32_t>(pv.stride_k % P) - n_;
      pv.t0 = sim.read(st_->snap_[pid][j]);
      pv.spc = ST_CATCHUP_WAIT;
      return false;
    }
    case ST_CATCHUP_WAIT: {
      std::uint32_t j = static_cast<std::uint32_t>(pv.stride_k % P) - n_;
      if (pv.t0 == 0 || Pid(j + 1) == pid) {
        pv.spc = ST_ADV;
        return false;
      }
      if (st_->checkpoint_[j + 1]->wait_step(sim, pid, pv.t0)) pv.spc = ST_ADV;
      return false;
    }
    case ST_YIELD_SNAP: {
      std::uint32_t j = static_cast<std::uint32_t>(pv.stride_k % P) - 2 * n_;
      pv.t0 = sim.read(st_->snap_[pid][j]);
      pv.spc = ST_YIELD_WAIT;
      return false;
    }
    case ST_YIELD_WAIT: {
      std::uint32_t j = static_cast<std::uint32_t>(pv.stride_k % P) - 2 * n_;
      if (pv.t0 == 0 || Pid(j + 1) == pid) {
        pv.spc = ST_ADV;
        return false;
      }
      if (st_->finish_[j + 1]->wait_step(sim, pid, pv.t0)) pv.spc = ST_ADV;
      return false;
    }
    case ST_SWITCH_NOOP:
      sim.local();
      pv.spc = ST_ADV;
      return false;
    case ST_ADV: {
      Word next = pv.stride_k + 1;
      sim.write(st_->stride_[pid], next);
      if (next % P == 0) {
        // cycle boundary: the pool that just spent a full cycle as backup is
        // provably unreferenced; reclaim it (instrumented as poisoned words
        // and a generation bump so stragglers fault instead of corrupting)
        std::uint32_t incoming = static_cast<std::uint32_t>((next / P) % 2);
        for (std::uint32_t k = 0; k < P; ++k) {
          std::uint32_t idx = st_->pool_[pid][incoming * P + k];
          const auto& nd = sim.nodes().at(idx);
          sim.mem().set_freed(nd.locked, true);
          sim.mem().set_freed(nd.next, true);
          sim.nodes().bump_gen(idx);
        }
      }
      pv.spc = ST_READ;
      return true;
    }
  }
  return true;
}

bool MrHooks::pre_doorway(Sim& sim, Pid pid) {
  Priv& pv = priv_.at(pid);
  if (pv.pc == H_IDLE) pv.pc = P_PEN0;
  switch (pv.pc) {
    case P_PEN0:
      pv.t0 = sim.read(st_->pen_flag_[pid]);
      pv.pc = pv.t0 ? P_PEN1 : P_Q0;
      return false;
    case P_PEN1:
      pv.t0 = sim.read(st_->pen_snap_[pid]);
      pv.pc = P_PEN2;
      return false;
    case P_PEN2:
      pv.t1 = sim.read(st_->stride_[pid]);
      pv.pc = pv.t0 == pv.t1 ? P_PEN_STRIDE : P_PEN_CLR;
      return false;
    case P_PEN_STRIDE:
      if (stride_step(sim, pid)) pv.pc = P_PEN_CLR;
      return false;
    case P_PEN_CLR:
      sim.write(st_->pen_flag_[pid], 0);
      pv.pc = P_Q0;
      return false;
    case P_Q0:
      pv.t0 = sim.read(st_->start_[pid]);
      pv.pc = P_Q1;
      return false;
    case P_Q1: {
      Word f = 0;
      st_->finish_[pid]->read_step(sim, pid, f);
      if (f == pv.t0) {
        pv.pc = P_REC0;  // quiescent: open a new attempt
      } else {
        pv.pc = H_IDLE;  // attempt still open (crash recovery)
        return true;
      }
      return false;
    }
    case P_REC0:
      pv.t1 = sim.read(st_->stride_[pid]);
      pv.pc = P_REC1;
      return false;
    case P_REC1:
      sim.write(st_->recorded_[pid], pv.t1);
      pv.pc = P_INC;
      return false;
    case P_INC:
      sim.write(st_->start_[pid], pv.t0 + 1);
      pv.pc = H_IDLE;
      return true;
    default:
      break;
  }
  pv.pc = H_IDLE;
  return true;
}

bool MrHooks::get_node(Sim& sim, Pid pid, Word& out) {
  Priv& pv = priv_.at(pid);
  if (pv.pc == H_IDLE) pv.pc = G0;
  const std::uint32_t P = st_->pool_size_;
  switch (pv.pc) {
    case G0: {
      pv.t0 = sim.read(st_->stride_[pid]);
      std::uint32_t k = static_cast<std::uint32_t>(pv.t0 % P);
      std::uint32_t side = static_cast<std::uint32_t>((pv.t0 / P) % 2);
      std::uint32_t slot = side * P + k;
      std::uint32_t idx = st_->pool_[pid][slot];
      const auto& nd = sim.nodes().at(idx);
      // a slot must come back reclaimed, never used, or mid-arming by this
      // very attempt; anything else means the stride accounting failed to
      // keep the pool ahead of reuse
      bool reclaimed = sim.mem().freed(nd.next);
      bool pristine =
          sim.mem().peek(nd.next) == kNil && sim.mem().peek(nd.locked) == 1;
      bool rearming = st_->handed_out_[pid] == slot + 1;
      if (!reclaimed && !pristine && !rearming)
        throw PoolExhausted("pool slot reused before reclamation");
      st_->handed_out_[pid] = slot + 1;
      sim.mem().set_freed(nd.next, false);
      sim.mem().set_freed(nd.locked, false);
      pv.t1 = sim.nodes().ref(idx);
      pv.pc = G1;
      return false;
    }
    case G1: {
      const auto& nd = sim.nodes().get(pv.t1);
      sim.write(nd.locked, 1);  // arm the spin flag
      pv.pc = G2;
      return false;
    }
    case G2: {
      const auto& nd = sim.nodes().get(pv.t1);
      sim.write(nd.next, kNil);
      out = pv.t1;
      pv.pc = H_IDLE;
      return true;
    }
    default:
      break;
  }
  pv.pc = H_IDLE;
  return true;
}

bool MrHooks::post_doorway(Sim& sim, Pid pid) {
  Priv& pv = priv_.at(pid);
  if (pv.pc == H_IDLE) pv.pc = C0;
  switch (pv.pc) {
    case C0:
      pv.t0 = sim.read(st_->start_[pid]);
      pv.pc = C1;
      return false;
    case C1: {
      Word c = 0;
      st_->checkpoint_[pid]->read_step(sim, pid, c);
      if (c >= pv.t0) {
        pv.pc = H_IDLE;
        return true;
      }
      pv.pc = C2;
      return false;
    }
    case C2:
      if (st_->checkpoint_[pid]->set_step(sim, pid, pv.t0)) {
        pv.pc = H_IDLE;
        return true;
      }
      return false;
    default:
      break;
  }
  pv.pc = H_IDLE;
  return true;
}

bool MrHooks::regular_stride(Sim& sim, Pid pid) {
  Priv& pv = priv_.at(pid);
  if (pv.pc == H_IDLE) pv.pc = D0;
  switch (pv.pc) {
    case D0:
      pv.t0 = sim.read(st_->recorded_[pid]);
      pv.pc = D1;
      return false;
    case D1:
      pv.t1 = sim.read(st_->stride_[pid]);
      if (pv.t0 != pv.t1) {  // already executed one stride during this attempt
        pv.pc = H_IDLE;
        return true;
      }
      pv.pc = D2;
      return false;
    case D2:
      if (stride_step(sim, pid)) {
        pv.pc = H_IDLE;
        return true;
      }
      return false;
    default:
      break;
  }
  pv.pc = H_IDLE;
  return true;
}

bool MrHooks::retire(Sim& sim, Pid pid, bool useless) {
  Priv& pv = priv_.at(pid);
  if (pv.pc == H_IDLE) pv.pc = useless ? T_PEN0 : T_CNT0;
  switch (pv.pc) {
    case T_PEN0:
      pv.t0 = sim.read(st_->stride_[pid]);
      pv.pc = T_PEN1;
      return false;
    case T_PEN1:
      sim.write(st_->pen_snap_[pid], pv.t0);
      pv.pc = T_PEN2;
      return false;
    case T_PEN2:
      sim.write(st_->pen_flag_[pid], 1);
      pv.pc = T_CNT0;
      return false;
    case T_CNT0:
      pv.t0 = sim.read(st_->start_[pid]);
      pv.pc = T_CNT1;
      return false;
    case T_CNT1: {
      Word f = 0;
      st_->finish_[pid]->read_step(sim, pid, f);
      if (f >= pv.t0) {  // replayed retire: already closed
        st_->handed_out_[pid] = 0;
        pv.pc = H_IDLE;
        return true;
      }
      pv.pc = T_CNT2;
      return false;
    }
    case T_CNT2: {
      Word c = 0;
      st_->checkpoint_[pid]->read_step(sim, pid, c);
      // a useless attempt never passed the checkpoint line; raise it first
      // so the counter chain invariant never breaks
      pv.pc = c >= pv.t0 ? T_FIN : T_CNT3;
      return false;
    }
    case T_CNT3:
      if (st_->checkpoint_[pid]->set_step(sim, pid, pv.t0)) pv.pc = T_FIN;
      return false;
    case T_FIN:
      if (st_->finish_[pid]->set_step(sim, pid, pv.t0)) {
        st_->handed_out_[pid] = 0;
        pv.pc = H_IDLE;
        return true;
      }
      return false;
    default:
      break;
  }
  pv.pc = H_IDLE;
  return true;
}

void MrHooks::on_crash(Pid pid) {
  priv_.at(pid) = Priv{};
  for (auto& obj : st_->objects_) obj->on_crash(pid);
}

void MrHooks::save(Buf& out) const {
  for (const Priv& pv : priv_) {
    out.u8(pv.pc);
    out.u8(pv.spc);
    out.u64(pv.t0);
    out.u64(pv.t1);
    out.u64(pv.stride_k);
  }
  for (std::uint32_t h : st_->handed_out_) out.u32(h);
  for (const auto& obj : st_->objects_) obj->save(out);
}

void MrHooks::load(BufReader& in) {
  for (Priv& pv : priv_) {
    pv.pc = in.u8();
    pv.spc = in.u8();
    pv.t0 = in.u64();
    pv.t1 = in.u64();
    pv.stride_k = in.u64();
  }
  for (std::uint32_t& h : st_->handed_out_) h = in.u32();
  for (auto& obj : st_->objects_) obj->load(in);
}

WrLockMr make_wrlock_mr(Sim& sim, const std::string& name, std::uint32_t level) {
  WrLockMr out;
  out.state = std::make_unique<ReclaimState>(sim, sim.n());
  out.hooks = std::make_unique<MrHooks>(out.state.get(), sim.n());
  out.lock = std::make_unique<WrLock>(sim, name, out.hooks.get(), 1, level);
  return out;
}

}  // namespace rme
