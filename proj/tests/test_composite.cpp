#include <doctest.h>

#include "rme/checker.hpp"
#include "rme/explore.hpp"
#include "rme/scenario.hpp"

using namespace rme;

namespace {
BenchCfg stack_cfg(const char* stack, std::uint32_t n, std::uint32_t requests = 1,
                   MemModel m = MemModel::DSM, std::uint32_t levels = 0) {
  BenchCfg cfg;
  cfg.n = n;
  cfg.stack = stack;
  cfg.requests = requests;
  cfg.model = RmrModel{m, true};
  cfg.levels = levels;
  return cfg;
}

// a bare two-process arbitrator exercised through harness programs
class ArbProgram : public Program {
 public:
  ArbProgram(Arbitrator* arb, Arbitrator::Side side, std::uint32_t requests)
      : arb_(arb), side_(side), requests_(requests) {}
  bool turn(Sim& sim, Pid pid) override {
    if (done_ >= requests_) return false;
    switch (phase_) {
      case 0:
        if (arb_->acquire_step(sim, pid, side_)) phase_ = 1;
        return true;
      case 1:
        sim.local();  // critical section
        phase_ = 2;
        return true;
      default:
        if (arb_->release_step(sim, pid, side_)) {
          phase_ = 0;
          done_++;
        }
        return true;
    }
  }
  void on_crash(Sim&, Pid pid) override {
    arb_->on_crash(pid);
    if (phase_ != 0) phase_ = 0;  // re-acquire; the phase word routes recovery
  }
  bool finished(const Sim&, Pid) const override { return done_ >= requests_; }
  void save(Buf& out) const override {
    out.u8(phase_);
    out.u32(done_);
    if (side_ == Arbitrator::kLeft) arb_->save(out);  // one side carries the object
  }
  void load(BufReader& in) override {
    phase_ = in.u8();
    done_ = in.u32();
    if (side_ == Arbitrator::kLeft) arb_->load(in);
  }

 private:
  Arbitrator* arb_;
  Arbitrator::Side side_;
  std::uint32_t requests_;
  std::uint8_t phase_ = 0;
  std::uint32_t done_ = 0;
};

}  // namespace

TEST_CASE("arbitrator: uncontended LEFT acquires within bounded steps") {
  Sim sim(2, RmrModel{MemModel::DSM, true});
  Arbitrator arb(sim, "arb");
  ArbProgram p1(&arb, Arbitrator::kLeft, 1);
  ArbProgram p2(&arb, Arbitrator::kRight, 0);
  sim.attach(1, &p1);
  sim.attach(2, &p2);
  std::uint32_t steps = 0;
  while (!sim.finished(1)) {
    sim.turn(1);
    REQUIRE(++steps < 32);
  }
  CHECK(steps <= 20);  // B_arb
}

TEST_CASE("arbitrator: exhaustive 2-process contention incl. crashes, zero ME violations") {
  for (std::uint32_t budget : {0u, 1u, 2u}) {
    Sim sim(2, RmrModel{MemModel::DSM, true});
    Arbitrator arb(sim, "arb");
    ArbProgram p1(&arb, Arbitrator::kLeft, 2);
    ArbProgram p2(&arb, Arbitrator::kRight, 2);
    sim.attach(1, &p1);
    sim.attach(2, &p2);
    ExploreCfg ec;
    ec.max_depth = budget == 0 ? 90 : 56;
    ec.crash_budget = budget;
    ExploreResult r = explore(sim, ec, {[&](const Sim& s) { arb.check_invariants(s); }});
    CHECK(r.violation.empty());
    if (budget == 0) CHECK_FALSE(r.depth_exhausted);  // crash-free runs complete
  }
}

TEST_CASE("arbitrator ME holds as a history check too") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Sim sim(2, RmrModel{MemModel::DSM, true});
    Arbitrator arb(sim, "arb");
    ArbProgram p1(&arb, Arbitrator::kLeft, 3);
    ArbProgram p2(&arb, Arbitrator::kRight, 3);
    sim.attach(1, &p1);
    sim.attach(2, &p2);
    SchedulerCfg sched;
    sched.seed = seed;
    run(sim, sched);
    History h = sim.history();
    auto v = check_me_joint(h, {arb.port_id(Arbitrator::kLeft), arb.port_id(Arbitrator::kRight)});
    CHECK(v.empty());
  }
}

TEST_CASE("splitter: sole process takes the fast path") {
  BenchCfg cfg = stack_cfg("semi", 2);
  Bench b = make_bench(cfg);
  Sim& sim = *b.sim;
  while (!b.passage_programs[0]->in_cs()) sim.turn(1);
  CHECK(sim.mem().peek(b.semi->x_word()) == 1);
  CHECK(sim.mem().peek(b.semi->type_word(1)) == SemiAdaptiveLock::kFast);
  SchedulerCfg sched;
  run(sim, sched);
  CHECK(check_me(sim.history(), b.top_id).empty());
}

TEST_CASE("splitter: crash after FAST persists retakes the identical path, no second CAS") {
  BenchCfg cfg = stack_cfg("semi", 2);
  Bench b = make_bench(cfg);
  Sim& sim = *b.sim;
  while (!b.passage_programs[0]->in_cs()) sim.turn(1);
  REQUIRE(sim.mem().peek(b.semi->type_word(1)) == SemiAdaptiveLock::kFast);
  sim.crash(1);
  sim.turn(1);  // restart
  std::size_t before = sim.events().size();
  while (!b.passage_programs[0]->in_cs()) sim.turn(1);
  for (std::size_t i = before; i < sim.events().size(); ++i) {
    const Event& e = sim.events()[i];
    CHECK_FALSE((e.kind == Ev::Cas && e.word == b.semi->x_word()));
  }
  CHECK(sim.mem().peek(b.semi->type_word(1)) == SemiAdaptiveLock::kFast);
}

TEST_CASE("semi-adaptive: failure-free solo request never touches the core") {
  BenchCfg cfg = stack_cfg("semi", 4);
  Bench b = make_bench(cfg);
  Sim& sim = *b.sim;
  while (!sim.finished(1)) sim.turn(1);
  History h = sim.history();
  const LockInfo* base = h.lock_by_name("base");
  REQUIRE(base);
  for (const Event& e : h.events)
    CHECK_FALSE((e.kind == Ev::Marker && e.lock == base->id));
}

TEST_CASE("semi-adaptive: exhaustive n=2, crashes included, zero ME violations") {
  for (std::uint32_t budget : {0u, 1u, 2u}) {
    Bench b = make_bench(stack_cfg("semi", 2));
    ExploreCfg ec;
    ec.max_depth = 50;
    ec.crash_budget = budget;
    ExploreResult r = explore(*b.sim, ec,
                              {check_single_cs(b.passage_programs), check_lock_state(b.top)});
    CHECK(r.violation.empty());
  }
}

TEST_CASE("tournament: n=1 enters directly with zero arbitrators") {
  Bench b = make_bench(stack_cfg("base", 1));
  Sim& sim = *b.sim;
  std::uint32_t steps = 0;
  while (!b.passage_programs[0]->in_cs()) {
    sim.turn(1);
    REQUIRE(++steps < 16);
  }
  CHECK(b.tournament->depth() == 0);
}

TEST_CASE("tournament: n=4 failure-free passage RMR within 2*log2(n)*C_arb") {
  Bench b = make_bench(stack_cfg("base", 4, 2));
  SchedulerCfg sched;
  sched.seed = 13;
  run(*b.sim, sched);
  History h = b.sim->history();
  const std::uint64_t c_arb = 16;
  for (const MetricsRow& r : metrics(h, b.top_id)) CHECK(r.rmr <= 2 * 2 * c_arb);
  CHECK(check_me(h, b.top_id).empty());
}

TEST_CASE("tournament: exhaustive n=2 and n=3 with crashes, zero ME violations") {
  // the full n=3 budget-2 sweep lives in the acceptance suite
  for (auto [n, budget] : {std::pair{2u, 1u}, {2u, 2u}, {3u, 1u}}) {
    Bench b = make_bench(stack_cfg("base", n));
    ExploreCfg ec;
    ec.max_depth = n == 2 ? 50 : 36;
    ec.crash_budget = budget;
    ExploreResult r = explore(*b.sim, ec,
                              {check_single_cs(b.passage_programs), check_lock_state(b.top)});
    CHECK(r.violation.empty());
  }
}

TEST_CASE("super-adaptive: default level count is ceil(log2(n+1))") {
  CHECK(default_levels(1) == 1);
  CHECK(default_levels(2) == 2);
  CHECK(default_levels(3) == 2);
  CHECK(default_levels(4) == 3);
  CHECK(default_levels(8) == 4);
  CHECK(default_levels(15) == 4);
  CHECK(default_levels(16) == 5);
}

TEST_CASE("super-adaptive: exhaustive n=2 (two levels), zero ME violations") {
  for (std::uint32_t budget : {0u, 1u, 2u}) {
    Bench b = make_bench(stack_cfg("super", 2, 1, MemModel::DSM, 2));
    ExploreCfg ec;
    ec.max_depth = 50;
    ec.crash_budget = budget;
    ExploreResult r = explore(*b.sim, ec,
                              {check_single_cs(b.passage_programs), check_lock_state(b.top)});
    CHECK(r.violation.empty());
  }
}

TEST_CASE("super-adaptive: failure-free request enters at level 1 with O(1) RMRs") {
  for (std::uint32_t n : {2u, 4u, 8u}) {
    Bench b = make_bench(stack_cfg("super", n, 1));
    SchedulerCfg sched;
    sched.seed = 31;
    run(*b.sim, sched);
    History h = b.sim->history();
    for (const MetricsRow& r : metrics(h, b.top_id)) {
      CHECK(r.deepest_level == 1);
      CHECK(r.rmr <= 60);
    }
    CHECK(check_me(h, b.top_id).empty());
  }
}

TEST_CASE("scripted adversary: crash-after-FAS sends one process slow through the core") {
  BenchCfg cfg = stack_cfg("semi", 3);
  Bench b = make_bench(cfg);
  Sim& sim = *b.sim;
  while (!b.passage_programs[0]->in_cs()) sim.turn(1);  // p1 FAST, parked in CS
  REQUIRE(crash_in_sensitive_window(b, 2));             // unsafe filter failure
  for (int i = 0;
       i < 400 && sim.mem().peek(b.semi->type_word(2)) != SemiAdaptiveLock::kSlow; ++i)
    sim.turn(2);
  CHECK(sim.mem().peek(b.semi->type_word(2)) == SemiAdaptiveLock::kSlow);
  CHECK(sim.mem().peek(b.semi->type_word(1)) == SemiAdaptiveLock::kFast);
  SchedulerCfg sched;
  run(sim, sched);
  History h = sim.history();
  CHECK(check_me(h, b.top_id).empty());
  const LockInfo* base = h.lock_by_name("base");
  bool core_used = false;
  for (const Event& e : h.events)
    if (e.kind == Ev::Marker && e.lock == base->id && e.pid == 2) core_used = true;
  CHECK(core_used);
}

TEST_CASE("escalation ladder reaches the scripted level with the theorem counts") {
  History h = scenario_escalation(2, 2, RmrModel{MemModel::DSM, true}, 2);
  const LockInfo* top = h.lock_by_name("super.L1");
  REQUIRE(top);
  CHECK(check_me(h, top->id).empty());
  auto rows = metrics(h, top->id);
  bool saw_level2 = false;
  for (const MetricsRow& r : rows) {
    if (r.deepest_level >= 2) {
      saw_level2 = true;
      CHECK(r.failure_density >= 1);   // x(x-1)/2 with x=2
      CHECK(r.point_contention >= 2);  // >= x
    }
  }
  CHECK(saw_level2);
}

TEST_CASE("composite invariants hold through seeded crash sweeps") {
  for (const char* stack : {"semi", "super"}) {
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
      Bench b = make_bench(stack_cfg(stack, 3, 2));
      SchedulerCfg sched;
      sched.seed = seed;
      sched.crash_prob = 0.03;
      sched.crash_budget_per_sp = 2;
      RunResult res = run(*b.sim, sched);
      CHECK(res.status == RunStatus::Completed);
      History h = b.sim->history();
      CHECK(check_me(h, b.top_id).empty());  // strongly recoverable: always
      b.top->check_invariants(*b.sim);
    }
  }
}
