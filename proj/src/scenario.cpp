#include "rme/scenario.hpp"

namespace rme {

Bench make_bench(const BenchCfg& cfg) {
  Bench b;
  b.sim = std::make_unique<Sim>(cfg.n, cfg.model);
  Sim& sim = *b.sim;

  if (cfg.stack == "wr") {
    if (cfg.reclamation) {
      b.mr = make_wrlock_mr(sim, "wr", 1);
      b.wr = b.mr.lock.get();
      b.reclaim = b.mr.state.get();
      b.top = b.wr;
    } else {
      b.plain_alloc = std::make_unique<PlainAllocator>();
      auto wr = std::make_unique<WrLock>(sim, "wr", b.plain_alloc.get(), 1, 1);
      b.wr = wr.get();
      b.top = wr.get();
      b.owned_locks.push_back(std::move(wr));
    }
  } else if (cfg.stack == "semi") {
    auto base = std::make_unique<TournamentLock>(sim, "base", 1);
    b.tournament = base.get();
    auto semi = std::make_unique<SemiAdaptiveLock>(sim, "semi", 1, base.get(), cfg.reclamation);
    b.semi = semi.get();
    b.top = semi.get();
    b.owned_locks.push_back(std::move(base));
    b.owned_locks.push_back(std::move(semi));
  } else if (cfg.stack == "super") {
    SuperAdaptiveLock::Config sc;
    sc.levels = cfg.levels;
    sc.reclamation = cfg.reclamation;
    auto super_lock = std::make_unique<SuperAdaptiveLock>(sim, "super", sc);
    b.super_lock = super_lock.get();
    b.tournament = super_lock->base();
    b.top = super_lock.get();
    b.owned_locks.push_back(std::move(super_lock));
  } else if (cfg.stack == "base") {
    auto base = std::make_unique<TournamentLock>(sim, "base", 1);
    b.tournament = base.get();
    b.top = base.get();
    b.owned_locks.push_back(std::move(base));
  } else {
    throw SimFault("unknown lock stack: " + cfg.stack);
  }

  b.top_id = b.top->id();
  sim.watch_lock(b.top);
  b.resource = sim.alloc_word(1, 0);

  for (Pid p = 1; p <= cfg.n; ++p) {
    auto prog = std::make_unique<PassageProgram>(b.top, b.top_id, b.resource, cfg.requests);
    b.passage_programs.push_back(prog.get());
    sim.attach(p, prog.get());
    b.programs.push_back(std::move(prog));
  }
  return b;
}

bool drive_until(Bench& b, Pid pid, const std::function<bool(const Sim&)>& pred,
                 std::uint32_t cap) {
  for (std::uint32_t i = 0; i < cap; ++i) {
    if (pred(*b.sim)) return true;
    if (b.sim->finished(pid)) return pred(*b.sim);
    b.sim->turn(pid);
  }
  return pred(*b.sim);
}

bool crash_in_sensitive_window(Bench& b, Pid pid, std::uint32_t cap) {
  for (std::uint32_t i = 0; i < cap; ++i) {
    std::vector<LockId> s;
    b.top->collect_sensitive(pid, s);
    if (!s.empty()) {
      b.sim->crash(pid);
      return true;
    }
    if (b.sim->finished(pid)) return false;
    b.sim->turn(pid);
  }
  return false;
}

History scenario_crash_after_fas(std::uint32_t n, RmrModel model) {
  BenchCfg cfg;
  cfg.n = n;
  cfg.stack = "wr";
  cfg.requests = 1;
  cfg.model = model;
  Bench b = make_bench(cfg);
  Sim& sim = *b.sim;

  // p1 acquires and parks inside its CS; p2 crashes right after its FAS,
  // recovers, and bypasses into the CS alongside p1.
  drive_until(b, 1, [&](const Sim&) { return b.passage_programs[0]->in_cs(); });
  crash_in_sensitive_window(b, 2);
  // p2 restarts, relieves the orphaned node and re-enters
  drive_until(b, 2, [&](const Sim&) { return b.passage_programs[1]->in_cs(); });
  // let everyone finish
  SchedulerCfg sched;
  sched.seed = 7;
  run(sim, sched);
  return sim.history();
}

History scenario_escalation(std::uint32_t x_target, std::uint32_t n, RmrModel model,
                            std::uint32_t levels) {
  BenchCfg cfg;
  cfg.n = n;
  cfg.stack = "super";
  cfg.levels = levels;
  cfg.requests = 1;
  cfg.model = model;
  Bench b = make_bench(cfg);
  Sim& sim = *b.sim;

  // w_i claims the level-i fast path: it bypasses the filters of levels
  // 1..i-1 with one unsafe crash each (every lower filter and splitter slot
  // is held by w_1..w_{i-1}), goes slow there, wins splitter i, and parks
  // spinning at the arbitrator below. w_1 parks inside the target CS.
  for (std::uint32_t i = 1; i <= x_target; ++i) {
    Pid w = static_cast<Pid>(i);
    for (std::uint32_t lvl = 1; lvl < i; ++lvl) {
      SemiAdaptiveLock* sa = b.super_lock->level(lvl);
      bool crashed = false;
      for (std::uint32_t step = 0; step < 20000 && !crashed; ++step) {
        std::vector<LockId> s;
        b.top->collect_sensitive(w, s);
        for (LockId l : s)
          if (l == sa->filter()->id()) {
            sim.crash(w);
            crashed = true;
          }
        if (!crashed) sim.turn(w);
      }
      if (!crashed) throw SimFault("escalation script: sensitive window never opened");
    }
    // drive w until it reaches the CS or parks on a spin (arbitrator handoff
    // pending on the previous rung)
    bool settled = false;
    for (std::uint32_t step = 0; step < 40000; ++step) {
      if (b.passage_programs[w - 1]->in_cs()) {
        settled = true;
        break;
      }
      std::string before = sim.canonical_state();
      sim.turn(w);
      if (sim.canonical_state() == before) {
        settled = true;  // pure spin: parked
        break;
      }
    }
    if (!settled) throw SimFault("escalation script: process never settled");
  }

  // release the ladder: a fair run completes every super-passage
  SchedulerCfg sched;
  sched.seed = 11;
  run(sim, sched);
  return sim.history();
}

}  // namespace rme
