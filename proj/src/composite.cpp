#include "rme/composite.hpp"

#include <cassert>
#include <cmath>

namespace rme {

namespace {

// phase word encoding: state | pid << 8
enum PhState : Word { kPhFree = 0, kPhAcquiring = 1, kPhInCs = 2, kPhReleasing = 3 };
inline Word ph_pack(Word state, Pid pid) { return state | (Word(pid) << 8); }
inline Word ph_state(Word v) { return v & 0xff; }
inline Pid ph_pid(Word v) { return static_cast<Pid>(v >> 8); }

// arbitrator acquire/release pcs
enum ArbPc : std::uint8_t {
  A_IDLE = 0,
  Q_PH,
  Q_LV,
  Q_SEQ,
  Q_SEQ2,
  Q_ARM,
  Q_PH2,
  Q_PUB,
  Q_CAS,
  Q_CHK,
  Q_SPIN,
  Q_UNPUB,
  Q_INCS,
  // release; the F_ mirror finishes an interrupted release before acquiring
  L_PH,
  L_LV,
  L_FREE,
  L_SLOT,
  L_CLAIM,
  L_GRANT,
  L_WAKE,
  L_CLR,
  L_DONE,
  F_LV,
  F_FREE,
  F_SLOT,
  F_CLAIM,
  F_GRANT,
  F_WAKE,
  F_CLR,
  F_DONE,
};

// slot encoding: 0 empty, else (tag << 32) | pid, with kMarkBit set once a
// releaser has claimed the waiter
constexpr Word kMarkBit = Word(1) << 62;
inline Word slot_pack(Pid pid, Word tag) { return (tag << 32) | pid; }
inline Pid slot_pid(Word v) { return static_cast<Pid>(v & 0xffffffffu); }
inline Word slot_tag(Word v) { return (v & ~kMarkBit) >> 32; }

}  // namespace

// -- Arbitrator ----------------------------------------------------------------

Arbitrator::Arbitrator(Sim& sim, const std::string& name, Pid home)
    : n_(sim.n()) {
  port_id_[kLeft] = sim.register_lock(name + ".L", "arbitrator_port");
  port_id_[kRight] = sim.register_lock(name + ".R", "arbitrator_port");
  lockword_ = sim.alloc_word(home, kNil);
  phase_[0] = sim.alloc_word(home, kPhFree);
  phase_[1] = sim.alloc_word(home, kPhFree);
  slot_[0] = sim.alloc_word(home, kNil);
  slot_[1] = sim.alloc_word(home, kNil);
  wake_.resize(n_ + 1);
  aseq_.resize(n_ + 1);
  for (Pid p = 1; p <= n_; ++p) {
    wake_[p] = sim.alloc_word(p, 0);
    aseq_[p] = sim.alloc_word(p, 0);  // monotone per-process attempt tag
  }
  priv_.resize(n_ + 1);
}

bool Arbitrator::acquire_step(Sim& sim, Pid pid, Side s) {
  Priv& pv = priv_.at(pid);
  const Word mine = holder_tag(pid, s);
  if (pv.pc == A_IDLE) {
    pv.pc = Q_PH;
    sim.marker(Mk::EnterBegin, port_id_[s]);
  }
  while (sim.budget_left()) {
    switch (pv.pc) {
      case Q_PH: {
        Word ph = sim.read(phase_[s]);
        if (ph == kPhFree) {
          pv.pc = Q_SEQ;
        } else if (ph_pid(ph) != pid) {
          throw SimFault("arbitrator port contract violated");
        } else if (ph_state(ph) == kPhInCs) {
          sim.marker(Mk::CsBegin, port_id_[s]);
          pv.pc = A_IDLE;
          return true;
        } else if (ph_state(ph) == kPhReleasing) {
          pv.pc = F_LV;  // finish the interrupted release first
        } else {
          pv.pc = Q_LV;  // Acquiring: resume with the current attempt tag
        }
        break;
      }
      case Q_LV: {
        Word lv = sim.read(lockword_);
        if (lv == mine) {
          pv.pc = Q_UNPUB;  // held (or granted while down)
        } else {
          pv.tag = 0;  // re-read the persisted tag, do not toggle
          pv.pc = Q_SEQ2;
        }
        break;
      }
      case Q_SEQ: {
        Word t = sim.read(aseq_[pid]);
        pv.tag = t + 1;  // fresh attempt: a tag no stale grant can match
        pv.pc = Q_SEQ2;
        break;
      }
      case Q_SEQ2:
        if (pv.tag == 0) {
          pv.tag = sim.read(aseq_[pid]);  // resume: keep the persisted tag
        } else {
          sim.write(aseq_[pid], pv.tag);
        }
        pv.pc = Q_ARM;
        break;
      case Q_ARM:
        sim.write(wake_[pid], 0);
        pv.pc = Q_PH2;
        break;
      case Q_PH2:
        sim.write(phase_[s], ph_pack(kPhAcquiring, pid));
        pv.pc = Q_PUB;
        break;
      case Q_PUB:
        sim.write(slot_[s], slot_pack(pid, pv.tag));
        pv.pc = Q_CAS;
        break;
      case Q_CAS:
        if (sim.cas(lockword_, kNil, mine))
          pv.pc = Q_UNPUB;
        else
          pv.pc = Q_CHK;
        break;
      case Q_CHK: {
        Word lv = sim.read(lockword_);
        if (lv == mine)
          pv.pc = Q_UNPUB;  // a releaser transferred the lock to us
        else if (lv == kNil)
          pv.pc = Q_CAS;  // freed between the CAS and this read; retry
        else
          pv.pc = Q_SPIN;
        break;
      }
      case Q_SPIN: {
        Word w = sim.read(wake_[pid]);
        if (w == pv.tag) pv.pc = Q_UNPUB;  // grant for this very attempt
        break;
      }
      case Q_UNPUB:
        sim.write(slot_[s], kNil);
        pv.pc = Q_INCS;
        break;
      case Q_INCS:
        sim.write(phase_[s], ph_pack(kPhInCs, pid));
        sim.marker(Mk::CsBegin, port_id_[s]);
        pv.pc = A_IDLE;
        return true;

      // finish_release mirror: identical to the release chain, then retry
      case F_LV: {
        Word lv = sim.read(lockword_);
        pv.pc = lv == mine ? F_FREE : F_SLOT;
        break;
      }
      case F_FREE:
        sim.cas(lockword_, mine, kNil);
        pv.pc = F_SLOT;
        break;
      case F_SLOT: {
        Word sv = sim.read(slot_[1 - s]);
        if (sv == kNil)
          pv.pc = F_DONE;
        else if (sv & kMarkBit)
          pv.pc = F_GRANT;  // replay of an interrupted claim
        else {
          pv.t0 = sv;
          pv.pc = F_CLAIM;
        }
        break;
      }
      case F_CLAIM:
        if (sim.cas(slot_[1 - s], pv.t0, pv.t0 | kMarkBit))
          pv.pc = F_GRANT;
        else
          pv.pc = F_SLOT;
        break;
      case F_GRANT: {
        // pv.t0 may be stale after a crash: re-derive from the marked slot
        Word sv = sim.read(slot_[1 - s]);
        if (!(sv & kMarkBit)) {
          pv.pc = F_DONE;  // the waiter unpublished concurrently
          break;
        }
        pv.t0 = sv & ~kMarkBit;
        sim.cas(lockword_, kNil, holder_tag(slot_pid(pv.t0), Side(1 - s)));
        pv.pc = F_WAKE;
        break;
      }
      case F_WAKE:
        sim.write(wake_[slot_pid(pv.t0)], slot_tag(pv.t0));
        pv.pc = F_CLR;
        break;
      case F_CLR:
        sim.cas(slot_[1 - s], pv.t0 | kMarkBit, kNil);
        pv.pc = F_DONE;
        break;
      case F_DONE:
        sim.write(phase_[s], kPhFree);
        pv.pc = Q_PH;
        break;

      default:
        throw SimFault("arbitrator acquire from a release pc");
    }
  }
  return false;
}

bool Arbitrator::release_step(Sim& sim, Pid pid, Side s) {
  Priv& pv = priv_.at(pid);
  const Word mine = holder_tag(pid, s);
  if (pv.pc == A_IDLE) {
    pv.pc = L_PH;
    sim.marker(Mk::CsEnd, port_id_[s]);
  }
  while (sim.budget_left()) {
    switch (pv.pc) {
      case L_PH:
        sim.write(phase_[s], ph_pack(kPhReleasing, pid));
        pv.pc = L_LV;
        break;
      case L_LV: {
        Word lv = sim.read(lockword_);
        pv.pc = lv == mine ? L_FREE : L_SLOT;
        break;
      }
      case L_FREE:
        sim.cas(lockword_, mine, kNil);
        pv.pc = L_SLOT;
        break;
      case L_SLOT: {
        Word sv = sim.read(slot_[1 - s]);
        if (sv == kNil)
          pv.pc = L_DONE;
        else if (sv & kMarkBit)
          pv.pc = L_GRANT;
        else {
          pv.t0 = sv;
          pv.pc = L_CLAIM;
        }
        break;
      }
      case L_CLAIM:
        if (sim.cas(slot_[1 - s], pv.t0, pv.t0 | kMarkBit))
          pv.pc = L_GRANT;
        else
          pv.pc = L_SLOT;  // the waiter self-served or re-published
        break;
      case L_GRANT: {
        Word sv = sim.read(slot_[1 - s]);
        if (!(sv & kMarkBit)) {
          pv.pc = L_DONE;
          break;
        }
        pv.t0 = sv & ~kMarkBit;
        sim.cas(lockword_, kNil, holder_tag(slot_pid(pv.t0), Side(1 - s)));
        pv.pc = L_WAKE;
        break;
      }
      case L_WAKE:
        // tagged wake: a stale replay carries an old tag and is ignored
        sim.write(wake_[slot_pid(pv.t0)], slot_tag(pv.t0));
        pv.pc = L_CLR;
        break;
      case L_CLR:
        sim.cas(slot_[1 - s], pv.t0 | kMarkBit, kNil);
        pv.pc = L_DONE;
        break;
      case L_DONE:
        sim.write(phase_[s], kPhFree);
        sim.marker(Mk::ExitEnd, port_id_[s]);
        pv.pc = A_IDLE;
        return true;
      default:
        throw SimFault("arbitrator release from an acquire pc");
    }
  }
  return false;
}

void Arbitrator::on_crash(Pid pid) { priv_.at(pid) = Priv{}; }

void Arbitrator::save(Buf& out) const {
  for (const Priv& pv : priv_) {
    out.u8(pv.pc);
    out.u64(pv.t0);
    out.u64(pv.tag);
  }
}
void Arbitrator::load(BufReader& in) {
  for (Priv& pv : priv_) {
    pv.pc = in.u8();
    pv.t0 = in.u64();
    pv.tag = in.u64();
  }
}

bool Arbitrator::holds(const Sim& sim, Pid pid, Side s) const {
  Word ph = sim.mem().peek(phase_[s]);
  return ph_state(ph) == kPhInCs && ph_pid(ph) == pid;
}

void Arbitrator::check_invariants(const Sim& sim) const {
  Word l = sim.mem().peek(phase_[0]);
  Word r = sim.mem().peek(phase_[1]);
  if (ph_state(l) == kPhInCs && ph_state(r) == kPhInCs)
    throw SimFault("arbitrator ME violated: both ports in CS");
}

// -- SemiAdaptiveLock -----------------------------------------------------------

namespace {
enum SaPc : std::uint32_t {
  S_IDLE = 0,
  // Enter
  SE_FR_BEGIN,   // filter recover markers
  SE_FR,         // filter recover steps
  SE_FE,         // filter enter steps
  SE_NAV_TYPE,
  SE_NAV_X,
  SE_NAV_CAS,
  SE_NAV_SET,
  SE_NAV_WINX,   // x already mine after a crash: retake the fast path
  SE_NAV_SLOW,
  SE_ARB_L,
  SE_CORE_RB,    // emit core recover markers
  SE_CORE_R,     // core recover steps
  SE_CORE_E,     // core enter steps
  SE_ARB_R,
  // Exit
  SX_TYPE,
  SX_ARB,
  SX_CORE,
  SX_CLEAR_TYPE,
  SX_RESET_X,
  SX_FILTER,
  // Recover is empty
};
}  // namespace

SemiAdaptiveLock::SemiAdaptiveLock(Sim& sim, const std::string& name, std::uint32_t level,
                                   RecoverableLock* core, bool mr_filter)
    : n_(sim.n()), core_(core) {
  id_ = sim.register_lock(name, "semi", 0);
  if (mr_filter) {
    mr_ = make_wrlock_mr(sim, name + ".filter", level);
    filter_ = std::move(mr_.lock);
  } else {
    plain_ = std::make_unique<PlainAllocator>();
    filter_ = std::make_unique<WrLock>(sim, name + ".filter", plain_.get(), 1, level);
  }
  arb_ = std::make_unique<Arbitrator>(sim, name + ".arb");
  x_ = sim.alloc_word(1, kNil);
  type_.resize(n_ + 1);
  for (Pid p = 1; p <= n_; ++p) type_[p] = sim.alloc_word(p, kNone);
  priv_.resize(n_ + 1);
}

StepRet SemiAdaptiveLock::step(Sim& sim, Pid pid, Segment seg) {
  Priv& pv = priv_.at(pid);
  StepRet ret;
  if (pv.pc == S_IDLE) {
    switch (seg) {
      case Segment::Recover:
        ret.done = true;  // empty Recover segment (bounded trivially)
        return ret;
      case Segment::Enter:
        pv.pc = SE_FR_BEGIN;
        break;
      case Segment::Exit:
        pv.pc = SX_TYPE;
        break;
    }
  }

  while (sim.budget_left() && !ret.done) {
    switch (pv.pc) {
      case SE_FR_BEGIN:
        sim.marker(Mk::RecoverBegin, filter_->id());
        pv.pc = SE_FR;
        break;
      case SE_FR: {
        StepRet r = filter_->step(sim, pid, Segment::Recover);
        if (r.done) {
          sim.marker(Mk::RecoverEnd, filter_->id());
          sim.marker(Mk::EnterBegin, filter_->id());
          pv.pc = SE_FE;
        }
        break;
      }
      case SE_FE: {
        StepRet r = filter_->step(sim, pid, Segment::Enter);
        if (r.doorway) {
          sim.marker(Mk::DoorwayEnd, id_);
          ret.doorway = true;  // the lock's doorway is its filter's doorway
        }
        if (r.done) {
          sim.marker(Mk::CsBegin, filter_->id());
          pv.pc = SE_NAV_TYPE;
        }
        break;
      }
      case SE_NAV_TYPE: {
        Word t = sim.read(type_[pid]);
        if (t == kFast) {
          pv.path = kFast;
          pv.pc = SE_ARB_L;
        } else if (t == kSlow) {
          pv.path = kSlow;
          pv.pc = SE_CORE_RB;
        } else {
          pv.pc = SE_NAV_X;
        }
        break;
      }
      case SE_NAV_X: {
        Word xv = sim.read(x_);
        if (xv == Word(pid))
          pv.pc = SE_NAV_WINX;  // persisted claim from a crashed passage
        else if (xv == kNil)
          pv.pc = SE_NAV_CAS;
        else
          pv.pc = SE_NAV_SLOW;
        break;
      }
      case SE_NAV_CAS: {
        bool ok = sim.cas(x_, kNil, Word(pid));
        pv.path = ok ? kFast : kSlow;
        pv.pc = SE_NAV_SET;
        break;
      }
      case SE_NAV_SET:
        sim.write(type_[pid], pv.path);
        pv.pc = pv.path == kFast ? SE_ARB_L : SE_CORE_RB;
        break;
      case SE_NAV_WINX:
        pv.path = kFast;
        sim.write(type_[pid], kFast);
        pv.pc = SE_ARB_L;
        break;
      case SE_NAV_SLOW:
        pv.path = kSlow;
        sim.write(type_[pid], kSlow);
        pv.pc = SE_CORE_RB;
        break;
      case SE_ARB_L:
        if (arb_->acquire_step(sim, pid, Arbitrator::kLeft)) {
          pv.pc = S_IDLE;
          ret.done = true;
        }
        break;
      case SE_CORE_RB:
        pv.path = kSlow;
        sim.marker(Mk::RecoverBegin, core_->id());
        pv.pc = SE_CORE_R;
        break;
      case SE_CORE_R: {
        StepRet r = core_->step(sim, pid, Segment::Recover);
        if (r.done) {
          sim.marker(Mk::RecoverEnd, core_->id());
          sim.marker(Mk::EnterBegin, core_->id());
          pv.pc = SE_CORE_E;
        }
        break;
      }
      case SE_CORE_E: {
        StepRet r = core_->step(sim, pid, Segment::Enter);
        if (r.done) {
          sim.marker(Mk::CsBegin, core_->id());
          pv.pc = SE_ARB_R;
        }
        break;
      }
      case SE_ARB_R:
        if (arb_->acquire_step(sim, pid, Arbitrator::kRight)) {
          pv.pc = S_IDLE;
          ret.done = true;
        }
        break;

      // ---- Exit ----
      case SX_TYPE: {
        Word t = sim.read(type_[pid]);
        pv.path = t;
        pv.pc = SX_ARB;
        break;
      }
      case SX_ARB:
        if (arb_->release_step(sim, pid,
                               pv.path == kFast ? Arbitrator::kLeft : Arbitrator::kRight)) {
          if (pv.path == kSlow) {
            sim.marker(Mk::CsEnd, core_->id());
            sim.marker(Mk::ExitBegin, core_->id());
            pv.pc = SX_CORE;
          } else {
            pv.pc = SX_CLEAR_TYPE;
          }
        }
        break;
      case SX_CORE: {
        StepRet r = core_->step(sim, pid, Segment::Exit);
        if (r.done) {
          sim.marker(Mk::ExitEnd, core_->id());
          pv.pc = SX_CLEAR_TYPE;
        }
        break;
      }
      case SX_CLEAR_TYPE:
        // destroy the retrace witnesses type-first: while x still names us no
        // other process can claim the fast path
        sim.write(type_[pid], kNone);
        pv.pc = pv.path == kFast ? SX_RESET_X : SX_FILTER;
        if (pv.pc == SX_FILTER) {
          sim.marker(Mk::CsEnd, filter_->id());
          sim.marker(Mk::ExitBegin, filter_->id());
        }
        break;
      case SX_RESET_X:
        sim.write(x_, kNil);
        sim.marker(Mk::CsEnd, filter_->id());
        sim.marker(Mk::ExitBegin, filter_->id());
        pv.pc = SX_FILTER;
        break;
      case SX_FILTER: {
        StepRet r = filter_->step(sim, pid, Segment::Exit);
        if (r.done) {
          sim.marker(Mk::ExitEnd, filter_->id());
          pv.pc = S_IDLE;
          ret.done = true;
        }
        break;
      }
      default:
        throw SimFault("corrupt semi-adaptive pc");
    }
  }
  return ret;
}

void SemiAdaptiveLock::on_crash(Pid pid) {
  priv_.at(pid) = Priv{};
  filter_->on_crash(pid);
  arb_->on_crash(pid);
  core_->on_crash(pid);
}

void SemiAdaptiveLock::collect_sensitive(Pid pid, std::vector<LockId>& out) const {
  filter_->collect_sensitive(pid, out);
  core_->collect_sensitive(pid, out);
}

StepBounds SemiAdaptiveLock::bounds() const {
  StepBounds core_b = core_->bounds();
  StepBounds b;
  b.recover = 2;
  b.exit = 12 + core_b.exit + 24 + 8;  // arb release + core exit + filter exit + own writes
  b.reenter = 8 + 6 + core_b.reenter + 14;  // filter fast path, path re-read, arbs
  return b;
}

void SemiAdaptiveLock::check_invariants(const Sim& sim) const {
  arb_->check_invariants(sim);
  core_->check_invariants(sim);
  // fast-path uniqueness: a persisted FAST type implies holding x
  Word xv = sim.mem().peek(x_);
  std::uint32_t fast = 0;
  for (Pid p = 1; p <= n_; ++p) {
    if (sim.mem().peek(type_[p]) == kFast) {
      fast++;
      if (xv != Word(p)) throw SimFault("splitter: FAST path without holding x");
    }
  }
  if (fast > 1) throw SimFault("splitter: two processes on the fast path");
}

void SemiAdaptiveLock::save(Buf& out) const {
  for (const Priv& pv : priv_) {
    out.u32(pv.pc);
    out.u64(pv.path);
  }
  filter_->save(out);
  arb_->save(out);
  core_->save(out);
}

void SemiAdaptiveLock::load(BufReader& in) {
  for (Priv& pv : priv_) {
    pv.pc = in.u32();
    pv.path = in.u64();
  }
  filter_->load(in);
  arb_->load(in);
  core_->load(in);
}

// -- TournamentLock --------------------------------------------------------------

namespace {
enum TPc : std::uint32_t {
  T_IDLE = 0,
  TE_POS,
  TE_ACQ,
  TE_ADV,
  TX_POS,
  TX_DEC,
  TX_REL,
};
}

TournamentLock::TournamentLock(Sim& sim, const std::string& name, std::uint32_t level_tag)
    : n_(sim.n()) {
  depth_ = 0;
  while ((1u << depth_) < n_) depth_++;
  id_ = sim.register_lock(name, "tournament", level_tag);
  arbs_.resize(depth_);
  for (std::uint32_t lvl = 0; lvl < depth_; ++lvl) {
    std::uint32_t count = 1u << (depth_ - lvl - 1);
    for (std::uint32_t k = 0; k < count; ++k)
      arbs_[lvl].push_back(std::make_unique<Arbitrator>(
          sim, name + ".a" + std::to_string(lvl) + "_" + std::to_string(k)));
  }
  pos_.resize(n_ + 1);
  for (Pid p = 1; p <= n_; ++p) pos_[p] = sim.alloc_word(p, 0);
  priv_.resize(n_ + 1);
}

Arbitrator* TournamentLock::arb_at(std::uint32_t level, Pid pid) {
  std::uint32_t leaf = pid - 1;
  return arbs_[level][leaf >> (level + 1)].get();
}

Arbitrator::Side TournamentLock::side_at(std::uint32_t level, Pid pid) const {
  std::uint32_t leaf = pid - 1;
  return static_cast<Arbitrator::Side>((leaf >> level) & 1);
}

StepRet TournamentLock::step(Sim& sim, Pid pid, Segment seg) {
  Priv& pv = priv_.at(pid);
  StepRet ret;
  if (pv.pc == T_IDLE) {
    switch (seg) {
      case Segment::Recover:
        ret.done = true;
        return ret;
      case Segment::Enter:
        sim.marker(Mk::DoorwayEnd, id_);
        ret.doorway = true;
        pv.pc = TE_POS;
        break;
      case Segment::Exit:
        pv.pc = TX_POS;
        break;
    }
  }

  while (sim.budget_left() && !ret.done) {
    switch (pv.pc) {
      case TE_POS: {
        Word k = sim.read(pos_[pid]);
        pv.level = static_cast<std::uint32_t>(k);
        if (pv.level >= depth_) {
          pv.pc = T_IDLE;
          ret.done = true;
        } else {
          pv.pc = TE_ACQ;
        }
        break;
      }
      case TE_ACQ:
        if (arb_at(pv.level, pid)->acquire_step(sim, pid, side_at(pv.level, pid)))
          pv.pc = TE_ADV;
        break;
      case TE_ADV:
        sim.write(pos_[pid], pv.level + 1);
        pv.level++;
        if (pv.level >= depth_) {
          pv.pc = T_IDLE;
          ret.done = true;
        } else {
          pv.pc = TE_ACQ;
        }
        break;

      case TX_POS: {
        Word k = sim.read(pos_[pid]);
        pv.level = static_cast<std::uint32_t>(k);
        pv.pc = pv.level == 0 ? T_IDLE : TX_DEC;
        if (pv.level == 0) ret.done = true;
        break;
      }
      case TX_DEC:
        // the position stops counting a level before its release begins, so
        // a crash can never leave a counted level in a half-released state
        sim.write(pos_[pid], pv.level - 1);
        pv.pc = TX_REL;
        break;
      case TX_REL:
        if (arb_at(pv.level - 1, pid)->release_step(sim, pid, side_at(pv.level - 1, pid))) {
          pv.level--;
          pv.pc = pv.level == 0 ? T_IDLE : TX_DEC;
          if (pv.level == 0) ret.done = true;
        }
        break;

      default:
        throw SimFault("corrupt tournament pc");
    }
  }
  return ret;
}

void TournamentLock::on_crash(Pid pid) {
  priv_.at(pid) = Priv{};
  for (auto& lvl : arbs_)
    for (auto& a : lvl) a->on_crash(pid);
}

StepBounds TournamentLock::bounds() const {
  StepBounds b;
  b.recover = 2;
  b.exit = 2 + depth_ * 12;
  b.reenter = 4;
  return b;
}

void TournamentLock::check_invariants(const Sim& sim) const {
  for (const auto& lvl : arbs_)
    for (const auto& a : lvl) a->check_invariants(sim);
}

void TournamentLock::save(Buf& out) const {
  for (const Priv& pv : priv_) {
    out.u32(pv.pc);
    out.u32(pv.level);
  }
  for (const auto& lvl : arbs_)
    for (const auto& a : lvl) a->save(out);
}

void TournamentLock::load(BufReader& in) {
  for (Priv& pv : priv_) {
    pv.pc = in.u32();
    pv.level = in.u32();
  }
  for (auto& lvl : arbs_)
    for (auto& a : lvl) a->load(in);
}

// -- SuperAdaptiveLock -------------------------------------------------------------

std::uint32_t default_levels(std::uint32_t n) {
  std::uint32_t lv = 0;
  while ((1u << lv) < n + 1) lv++;
  return lv == 0 ? 1 : lv;
}

SuperAdaptiveLock::SuperAdaptiveLock(Sim& sim, const std::string& name, const Config& cfg) {
  std::uint32_t levels = cfg.levels ? cfg.levels : default_levels(sim.n());
  RecoverableLock* core = cfg.base;
  if (!core) {
    owned_base_ = std::make_unique<TournamentLock>(sim, name + ".base", levels);
    core = owned_base_.get();
  }
  // build bottom-up: level Λ's core is the base lock
  levels_.resize(levels);
  for (std::uint32_t i = levels; i >= 1; --i) {
    levels_[i - 1] = std::make_unique<SemiAdaptiveLock>(
        sim, name + ".L" + std::to_string(i), i, core, cfg.reclamation);
    core = levels_[i - 1].get();
  }
  top_ = levels_[0].get();
}

void SuperAdaptiveLock::check_invariants(const Sim& sim) const {
  for (const auto& l : levels_) l->check_invariants(sim);
  if (owned_base_) owned_base_->check_invariants(sim);
}

}  // namespace rme
