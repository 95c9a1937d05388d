#include <doctest.h>

#include "rme/broadcast.hpp"
#include "rme/explore.hpp"

using namespace rme;

#include "broadcast_harness.hpp"

using namespace rme::bcharness;


TEST_CASE("fresh object reads zero; completed Set is visible") {
  for (MemModel m : {MemModel::CC, MemModel::DSM}) {
    BcBench b = make_bc(2, m, 3);
    Sim& sim = *b.sim;
    Word out = 99;
    while (!b.obj->read_step(sim, 2, out)) {
    }
    CHECK(out == 0);
    while (!b.sim->finished(1)) sim.turn(1);
    while (!b.obj->read_step(sim, 2, out)) {
    }
    CHECK(out == 3);
  }
}

TEST_CASE("set before wait returns without blocking") {
  for (MemModel m : {MemModel::CC, MemModel::DSM}) {
    BcBench b = make_bc(2, m, 1);
    Sim& sim = *b.sim;
    while (!b.sim->finished(1)) sim.turn(1);
    std::uint32_t steps = 0;
    while (!b.sim->finished(2)) {
      sim.turn(2);
      REQUIRE(++steps < 32);
    }
  }
}

TEST_CASE("wait before any set never returns (bounded exploration)") {
  BcBench b = make_bc(2, MemModel::DSM, 1);
  Sim& sim = *b.sim;
  for (int i = 0; i < 60; ++i) {
    sim.turn(2);
    CHECK(b.waiters[0]->current() == 1);
  }
}

TEST_CASE("crash mid-Set before the B write leaves the prior value visible") {
  BcBench b = make_bc(2, MemModel::DSM, 3);
  Sim& sim = *b.sim;
  auto* dsm = dynamic_cast<BroadcastDSM*>(b.obj);
  REQUIRE(dsm);
  while (b.owner->current() < 3) sim.turn(1);
  while (sim.mem().peek(dsm->a_word()) != 3) sim.turn(1);
  CHECK(sim.mem().peek(dsm->b_word()) == 2);
  sim.crash(1);
  Word out = 0;
  while (!b.obj->read_step(sim, 2, out)) {
  }
  CHECK(out == 2);
  CHECK(sim.mem().peek(dsm->b_word()) <= sim.mem().peek(dsm->a_word()));
  sim.turn(1);  // restart
  while (!b.sim->finished(1)) sim.turn(1);
  while (!b.obj->read_step(sim, 2, out)) {
  }
  CHECK(out == 3);
}

TEST_CASE("exhaustive n=2: safety holds and every schedule quiesces") {
  for (MemModel m : {MemModel::CC, MemModel::DSM}) {
    BcBench b = make_bc(2, m, 1);
    SafetyCheck safety{b.owner.get(), &b.waiters};
    ExploreCfg ec;
    ec.max_depth = 60;
    ec.crash_budget = 1;
    ExploreResult r = explore(*b.sim, ec, {StateCheck(safety)});
    CHECK(r.violation.empty());
    CHECK_FALSE(r.depth_exhausted);
  }
}

TEST_CASE("exhaustive n=3 DSM with one owner crash: safety and liveness") {
  BcBench b = make_bc(3, MemModel::DSM, 1);
  SafetyCheck safety{b.owner.get(), &b.waiters};
  ExploreCfg ec;
  ec.max_depth = 72;
  ec.crash_budget = 1;
  ec.max_states = 40000000;
  ExploreResult r = explore(*b.sim, ec, {StateCheck(safety)});
  CHECK(r.violation.empty());
  CHECK_FALSE(r.depth_exhausted);
}

TEST_CASE("wake-up chain runs in descending id order, one forward per waiter") {
  BcBench b = make_bc(3, MemModel::DSM, 1);
  Sim& sim = *b.sim;
  for (int i = 0; i < 3; ++i) sim.turn(2);
  for (int i = 0; i < 3; ++i) sim.turn(3);
  while (b.owner->current() < 2) sim.turn(1);
  auto* dsm = dynamic_cast<BroadcastDSM*>(b.obj);
  std::uint32_t owner_cas = 0;
  for (const Event& e : sim.events())
    if (e.kind == Ev::Cas && e.pid == 1 && e.word == dsm->target_word(3)) owner_cas++;
  CHECK(owner_cas == 1);  // owner wakes only the chain head (highest id)
  SchedulerCfg sched;
  run(sim, sched);
  std::uint32_t forward_cas = 0;
  for (const Event& e : sim.events())
    if (e.kind == Ev::Cas && e.pid == 3 && e.word == dsm->target_word(2)) forward_cas++;
  CHECK(forward_cas == 1);  // p3 forwards exactly one CAS to p2
}

TEST_CASE("operation RMR constants") {
  for (MemModel m : {MemModel::CC, MemModel::DSM}) {
    BcBench b = make_bc(4, m, 5);
    Sim& sim = *b.sim;
    std::uint64_t before, worst = 0;

    for (Word x = 1; x <= 5; ++x) {  // churn-free bset
      before = sim.rmr_count(1);
      while (!b.obj->set_step(sim, 1, x)) {
      }
      worst = std::max(worst, sim.rmr_count(1) - before);
    }
    CHECK(worst <= 10);

    before = sim.rmr_count(2);  // bwait after completion
    std::uint32_t steps = 0;
    while (!b.obj->wait_step(sim, 2, 5)) REQUIRE(++steps < 64);
    CHECK(sim.rmr_count(2) - before <= 10);

    Word out;
    before = sim.rmr_count(3);  // bread
    while (!b.obj->read_step(sim, 3, out)) {
    }
    CHECK(sim.rmr_count(3) - before <= 2);
  }
}

TEST_CASE("waiter crashes with same-argument retries never strand the chain") {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    BcBench b = make_bc(3, MemModel::DSM, 3);
    Sim& sim = *b.sim;
    Rng rng(seed);
    std::uint64_t guard = 0;
    std::uint32_t crashes_left = 3;
    while (!sim.all_finished()) {
      REQUIRE(++guard < 30000);
      Pid p = 1 + rng.below(3);
      if (sim.finished(p)) continue;
      if (!sim.live(p)) {
        sim.turn(p);
        continue;
      }
      if (crashes_left > 0 && rng.chance(0.02)) {
        sim.crash(p);
        crashes_left--;
        continue;
      }
      sim.turn(p);
    }
  }
}
