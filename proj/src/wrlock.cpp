#include "rme/wrlock.hpp"

#include <cassert>

namespace rme {

namespace {
// program counters; 0 = segment idle
enum Pc : std::uint32_t {
  kIdle = 0,
  // Recover
  R_CHECK = 1,
  R_PRED,
  R_PREDR,
  R_MINE,
  R_RELIEVE,
  R_DETACH,
  R_SUCC,
  R_WAKE,
  R_DETACH2,
  R_MARK,
  R_RETIRE,
  R_FREE,
  // Enter
  E_CHECK = 32,
  E_PRE,
  E_SETUP0,
  E_SETUP1,
  E_SETUP2,
  E_ALLOC,
  E_MINE,
  E_FAS,
  E_PERSIST,
  E_POST,
  E_STRIDE,
  E_RESUME,
  E_WAIT0,
  E_LINK,
  E_LINKCHK,
  E_SPIN,
  E_INCS,
  // Exit
  X_CHECK = 64,
  X_SET,
  X_MINE,
  X_RELIEVE,
  X_DETACH,
  X_SUCC,
  X_WAKE,
  X_DETACH2,
  X_MARK,
  X_RETIRE,
  X_FREE,
};
}  // namespace

WrLock::WrLock(Sim& sim, const std::string& name, WrHooks* hooks, Pid home, std::uint32_t level)
    : hooks_(hooks), n_(sim.n()) {
  id_ = sim.register_lock(name, "wrlock", level);
  tail_ = sim.alloc_word(home, kNil);
  state_.resize(n_ + 1);
  mine_.resize(n_ + 1);
  pred_.resize(n_ + 1);
  priv_.resize(n_ + 1);
  for (Pid p = 1; p <= n_; ++p) {
    state_[p] = sim.alloc_word(p, kFree);
    mine_[p] = sim.alloc_word(p, kUnset);
    pred_[p] = sim.alloc_word(p, kUnset);
  }
  sim.set_lock_words(id_, tail_, std::vector<WordId>(pred_.begin() + 1, pred_.end()));
}

StepRet WrLock::step(Sim& sim, Pid pid, Segment seg) {
  Priv& pv = priv_.at(pid);
  StepRet ret;
  if (pv.pc == kIdle) {
    switch (seg) {
      case Segment::Recover: pv.pc = R_CHECK; break;
      case Segment::Enter: pv.pc = E_CHECK; break;
      case Segment::Exit: pv.pc = X_CHECK; break;
    }
  }

  while (sim.budget_left() && !ret.done) {
    switch (pv.pc) {
      // ---- Recover ----
      case R_CHECK: {
        Word s = sim.read(state_[pid]);
        if (s == kTryEnter) {
          pv.pc = R_PRED;
        } else if (s == kExiting) {
          // the crash interrupted an exit whose relieve may have landed:
          // finish the exit here instead of re-entering the CS
          pv.pc = X_MINE;
        } else if (s == kRelieved) {
          pv.pc = R_PREDR;
        } else {
          pv.pc = kIdle;  // Free / InCS: nothing to repair here
          ret.done = true;
        }
        break;
      }
      case R_PREDR: {
        // a Relieved state comes from either an abandoned attempt (pred was
        // never persisted) or an interrupted useful exit
        Word pr = sim.read(pred_[pid]);
        pv.pc = pr == kUnset ? R_RETIRE : X_RETIRE;
        break;
      }
      case R_PRED: {
        Word pr = sim.read(pred_[pid]);
        if (pr != kUnset) {
          pv.pc = kIdle;  // safe crash: the appended attempt resumes in Enter
          ret.done = true;
        } else {
          pv.pc = R_MINE;
        }
        break;
      }
      case R_MINE:
        pv.node = sim.read(mine_[pid]);
        pv.pc = pv.node == kUnset ? R_MARK : R_RELIEVE;
        break;
      case R_RELIEVE: {
        const auto& nd = sim.nodes().get(pv.node);
        bool ok = sim.cas(nd.next, kNil, kLocked);
        pv.pc = ok ? R_DETACH : R_SUCC;
        break;
      }
      case R_DETACH:
        sim.cas(tail_, pv.node, kNil);
        pv.pc = R_MARK;
        break;
      case R_SUCC: {
        const auto& nd = sim.nodes().get(pv.node);
        Word nx = sim.read(nd.next);
        if (nx == kLocked) {
          pv.pc = R_DETACH2;  // earlier replay already relieved; retry detach
        } else {
          pv.tmp = nx;
          pv.pc = R_WAKE;
        }
        break;
      }
      case R_WAKE: {
        const auto& succ = sim.nodes().get(pv.tmp);
        sim.write(succ.locked, 0);
        pv.pc = R_MARK;
        break;
      }
      case R_DETACH2:
        sim.cas(tail_, pv.node, kNil);
        pv.pc = R_MARK;
        break;
      case R_MARK:
        sim.write(state_[pid], kRelieved);
        pv.pc = R_RETIRE;
        break;
      case R_RETIRE:
        if (hooks_->retire(sim, pid, /*useless=*/true)) pv.pc = R_FREE;
        break;
      case R_FREE:
        sim.write(state_[pid], kFree);
        pv.pc = kIdle;
        ret.done = true;
        break;

      // ---- Enter ----
      case E_CHECK: {
        Word s = sim.read(state_[pid]);
        if (s == kExiting || s == kRelieved)
          throw SimFault("wrlock: Enter invoked before Recover finished an exit");
        if (s == kInCs) {
          // BCSR fast path: a constant number of branch tests, all false
          sim.marker(Mk::DoorwayEnd, id_);
          ret.doorway = true;
          pv.pc = kIdle;
          ret.done = true;
        } else if (s == kTryEnter) {
          pv.pc = E_RESUME;
        } else {
          pv.pc = E_PRE;
        }
        break;
      }
      case E_PRE:
        if (hooks_->pre_doorway(sim, pid)) pv.pc = E_SETUP0;
        break;
      case E_SETUP0:
        sim.write(pred_[pid], kUnset);
        pv.pc = E_SETUP1;
        break;
      case E_SETUP1:
        sim.write(mine_[pid], kUnset);
        pv.pc = E_SETUP2;
        break;
      case E_SETUP2:
        sim.write(state_[pid], kTryEnter);
        pv.pc = E_ALLOC;
        break;
      case E_ALLOC:
        if (hooks_->get_node(sim, pid, pv.node)) pv.pc = E_MINE;
        break;
      case E_MINE:
        sim.write(mine_[pid], pv.node);
        pv.pc = E_FAS;
        break;
      case E_FAS:
        pv.pred = sim.fas(tail_, pv.node);
        pv.pc = E_PERSIST;  // sensitive window open until the persist lands
        break;
      case E_PERSIST:
        sim.write(pred_[pid], pv.pred == kNil ? kNil : pv.pred);
        pv.pc = E_POST;
        break;
      case E_POST:
        if (hooks_->post_doorway(sim, pid)) {
          sim.marker(Mk::DoorwayEnd, id_);
          ret.doorway = true;
          pv.pc = E_STRIDE;
        }
        break;
      case E_STRIDE:
        if (hooks_->regular_stride(sim, pid)) pv.pc = E_WAIT0;
        break;
      case E_RESUME:
        // the appended attempt resumes: the checkpoint and regular-stride
        // lines re-run (both are guarded and no-ops when already done)
        pv.node = sim.read(mine_[pid]);
        pv.pc = E_POST;
        break;
      case E_WAIT0:
        pv.pred = sim.read(pred_[pid]);
        pv.pc = pv.pred == kNil ? E_INCS : E_LINK;
        break;
      case E_LINK: {
        const auto& prev = sim.nodes().get(pv.pred);
        bool ok = sim.cas(prev.next, kNil, pv.node);
        pv.pc = ok ? E_SPIN : E_LINKCHK;
        break;
      }
      case E_LINKCHK: {
        const auto& prev = sim.nodes().get(pv.pred);
        Word nx = sim.read(prev.next);
        pv.pc = nx == kLocked ? E_INCS : E_SPIN;  // nx == my node: already linked
        break;
      }
      case E_SPIN: {
        const auto& nd = sim.nodes().get(pv.node);
        Word l = sim.read(nd.locked);
        if (l == 0) pv.pc = E_INCS;
        break;
      }
      case E_INCS:
        sim.write(state_[pid], kInCs);
        pv.pc = kIdle;
        ret.done = true;
        break;

      // ---- Exit ----
      case X_CHECK: {
        Word s = sim.read(state_[pid]);
        if (s == kInCs) {
          pv.pc = X_SET;
        } else if (s == kFree) {
          pv.pc = kIdle;  // already completed in a prior passage
          ret.done = true;
        } else {
          throw SimFault("wrlock: Exit from an unexpected state");
        }
        break;
      }
      case X_SET:
        sim.write(state_[pid], kExiting);
        pv.pc = X_MINE;
        break;
      case X_MINE:
        pv.node = sim.read(mine_[pid]);
        pv.pc = X_RELIEVE;
        break;
      case X_RELIEVE: {
        const auto& nd = sim.nodes().get(pv.node);
        bool ok = sim.cas(nd.next, kNil, kLocked);
        pv.pc = ok ? X_DETACH : X_SUCC;
        break;
      }
      case X_DETACH:
        sim.cas(tail_, pv.node, kNil);
        pv.pc = X_MARK;
        break;
      case X_SUCC: {
        const auto& nd = sim.nodes().get(pv.node);
        Word nx = sim.read(nd.next);
        if (nx == kLocked) {
          pv.pc = X_DETACH2;
        } else {
          pv.tmp = nx;
          pv.pc = X_WAKE;
        }
        break;
      }
      case X_WAKE: {
        const auto& succ = sim.nodes().get(pv.tmp);
        sim.write(succ.locked, 0);
        pv.pc = X_MARK;
        break;
      }
      case X_DETACH2:
        sim.cas(tail_, pv.node, kNil);
        pv.pc = X_MARK;
        break;
      case X_MARK:
        sim.write(state_[pid], kRelieved);
        pv.pc = X_RETIRE;
        break;
      case X_RETIRE:
        if (hooks_->retire(sim, pid, /*useless=*/false)) pv.pc = X_FREE;
        break;
      case X_FREE:
        sim.write(state_[pid], kFree);
        pv.pc = kIdle;
        ret.done = true;
        break;

      default:
        assert(false && "corrupt wrlock pc");
        ret.done = true;
    }
  }
  return ret;
}

void WrLock::on_crash(Pid pid) {
  priv_.at(pid) = Priv{};
  hooks_->on_crash(pid);
}

void WrLock::collect_sensitive(Pid pid, std::vector<LockId>& out) const {
  if (priv_.at(pid).pc == E_PERSIST) out.push_back(id_);
}

bool WrLock::holder_state(const Sim& sim, Pid p) const {
  return sim.mem().peek(state_[p]) == kInCs;
}

std::uint32_t WrLock::in_cs_count(const Sim& sim) const {
  std::uint32_t c = 0;
  for (Pid p = 1; p <= n_; ++p)
    if (sim.mem().peek(state_[p]) == kInCs) c++;
  return c;
}

void WrLock::check_invariants(const Sim& sim) const { (void)sim; }

void WrLock::save(Buf& out) const {
  for (Pid p = 1; p <= n_; ++p) {
    const Priv& pv = priv_[p];
    out.u32(pv.pc);
    out.u64(pv.node);
    out.u64(pv.pred);
    out.u64(pv.tmp);
  }
  hooks_->save(out);
}

void WrLock::load(BufReader& in) {
  for (Pid p = 1; p <= n_; ++p) {
    Priv& pv = priv_[p];
    pv.pc = in.u32();
    pv.node = in.u64();
    pv.pred = in.u64();
    pv.tmp = in.u64();
  }
  hooks_->load(in);
}

}  // namespace rme
