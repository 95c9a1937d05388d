#include "rme/program.hpp"

namespace rme {

namespace {
// instruction events the given turn added
std::uint32_t turn_instrs(const Sim& sim, std::size_t before) {
  std::uint32_t c = 0;
  for (std::size_t i = before; i < sim.events().size(); ++i)
    if (sim.events()[i].is_instr()) c++;
  return c;
}
}  // namespace

bool PassageProgram::turn(Sim& sim, Pid pid) {
  switch (phase_) {
    case Phase::Parked:
      if (done_requests_ >= requests_) return false;
      phase_ = Phase::Ncs;
      sim.marker(Mk::NcsBegin, lock_id_);
      sim.local();  // non-critical work
      return true;

    case Phase::Ncs:
      if (!sim.sp_open(pid)) {
        sim.sp_begin(pid);
        sp_counter_++;
      }
      phase_ = Phase::Recover;
      crashed_this_passage_ = 0;
      seg_steps_ = 0;
      sim.marker(Mk::RecoverBegin, lock_id_);
      [[fallthrough]];

    case Phase::Recover: {
      std::size_t before = sim.events().size();
      StepRet r = lock_->step(sim, pid, Segment::Recover);
      seg_steps_ += turn_instrs(sim, before);
      if (seg_steps_ > lock_->bounds().recover)
        throw SimFault("bounded recovery violated");
      if (r.done) {
        sim.marker(Mk::RecoverEnd, lock_id_);
        sim.marker(Mk::EnterBegin, lock_id_);
        phase_ = Phase::Enter;
        seg_steps_ = 0;
        if (!sim.budget_left()) return true;
        // fall into Enter within the same turn when Recover emitted nothing
        return turn(sim, pid);
      }
      return true;
    }

    case Phase::Enter: {
      std::size_t before = sim.events().size();
      StepRet r = lock_->step(sim, pid, Segment::Enter);
      // waiting-room spins are legitimately unbounded, so the counter runs
      // only while a bounded-CS-reentry obligation is armed
      if (bcsr_pending_) {
        seg_steps_ += turn_instrs(sim, before);
        if (seg_steps_ > lock_->bounds().reenter)
          throw SimFault("bounded CS reentry violated");
      }
      if (r.done) {
        sim.marker(Mk::CsBegin, lock_id_);
        phase_ = Phase::Cs;
        cs_step_ = 0;
        bcsr_pending_ = 0;
      }
      return true;
    }

    case Phase::Cs:
      sim.write(resource_, pid);
      sim.marker(Mk::CsEnd, lock_id_);
      sim.marker(Mk::ExitBegin, lock_id_);
      phase_ = Phase::Exit;
      seg_steps_ = 0;
      return true;

    case Phase::Exit: {
      std::size_t before = sim.events().size();
      StepRet r = lock_->step(sim, pid, Segment::Exit);
      seg_steps_ += turn_instrs(sim, before);
      if (seg_steps_ > lock_->bounds().exit) throw SimFault("bounded exit violated");
      if (r.done) {
        sim.marker(Mk::ExitEnd, lock_id_);
        if (!crashed_this_passage_) {
          sim.sp_end(pid);
          done_requests_++;
        }
        phase_ = Phase::Parked;
      }
      return true;
    }
  }
  return false;
}

void PassageProgram::on_crash(Sim& sim, Pid pid) {
  (void)sim;
  (void)pid;
  lock_->on_crash(pid);
  // restart resumes at the top of NCS; an outstanding request keeps the
  // process unfinished, so the next turn begins a fresh NCS stretch
  if (phase_ == Phase::Cs) bcsr_pending_ = 1;
  phase_ = Phase::Parked;
  crashed_this_passage_ = 1;
  cs_step_ = 0;
  seg_steps_ = 0;
}

bool PassageProgram::finished(const Sim& sim, Pid pid) const {
  (void)sim;
  (void)pid;
  return phase_ == Phase::Parked && done_requests_ >= requests_;
}

void PassageProgram::save(Buf& out) const {
  out.u8(static_cast<std::uint8_t>(phase_));
  out.u32(done_requests_);
  out.u32(sp_counter_);
  out.u8(crashed_this_passage_);
  out.u8(cs_step_);
  out.u8(bcsr_pending_);
  out.u32(seg_steps_);
}

void PassageProgram::load(BufReader& in) {
  phase_ = static_cast<Phase>(in.u8());
  done_requests_ = in.u32();
  sp_counter_ = in.u32();
  crashed_this_passage_ = in.u8();
  cs_step_ = in.u8();
  bcsr_pending_ = in.u8();
  seg_steps_ = in.u32();
}

}  // namespace rme
