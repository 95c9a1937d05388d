#include <doctest.h>

#include "rme/checker.hpp"
#include "rme/scenario.hpp"

using namespace rme;

namespace {

// hand-built marker histories for the classification oracles
struct HistoryBuilder {
  History h;
  Seq seq = 1;
  explicit HistoryBuilder(std::uint32_t n, LockId lock = 1) {
    h.n = n;
    h.model = "dsm";
    h.locks.push_back(LockInfo{lock, "hand", "wrlock", 1});
  }
  HistoryBuilder& mk(Pid p, Mk m, LockId lock = 1) {
    Event e;
    e.seq = seq++;
    e.pid = p;
    e.kind = Ev::Marker;
    e.marker = m;
    e.lock = lock;
    h.events.push_back(e);
    return *this;
  }
  HistoryBuilder& crash(Pid p) {
    Event e;
    e.seq = seq++;
    e.pid = p;
    e.kind = Ev::Crash;
    h.events.push_back(e);
    return *this;
  }
  HistoryBuilder& step(Pid p) {
    Event e;
    e.seq = seq++;
    e.pid = p;
    e.kind = Ev::Local;
    h.events.push_back(e);
    return *this;
  }
  HistoryBuilder& passage(Pid p, LockId lock = 1) {
    return mk(p, Mk::RecoverBegin, lock)
        .mk(p, Mk::EnterBegin, lock)
        .mk(p, Mk::DoorwayEnd, lock)
        .mk(p, Mk::CsBegin, lock)
        .mk(p, Mk::CsEnd, lock)
        .mk(p, Mk::ExitBegin, lock)
        .mk(p, Mk::ExitEnd, lock);
  }
};

}  // namespace

TEST_CASE("crash-free run of one request is a single failure-free passage") {
  HistoryBuilder hb(1);
  hb.passage(1);
  auto ps = classify_passages(hb.h, 1);
  REQUIRE(ps.size() == 1);
  CHECK(ps[0].complete);
  CHECK(ps[0].failure_free);
  auto sps = classify_superpassages(hb.h, 1);
  REQUIRE(sps.size() == 1);
  CHECK(sps[0].failure_free);
  CHECK(sps[0].complete);
}

TEST_CASE("crash inside CS then completed retry gives two passages") {
  HistoryBuilder hb(1);
  hb.mk(1, Mk::RecoverBegin).mk(1, Mk::EnterBegin).mk(1, Mk::DoorwayEnd).mk(1, Mk::CsBegin);
  hb.crash(1);
  hb.passage(1);
  auto ps = classify_passages(hb.h, 1);
  REQUIRE(ps.size() == 2);
  CHECK(ps[0].crash_ended);
  CHECK(ps[0].crashed_in_cs);
  CHECK_FALSE(ps[0].failure_free);
  CHECK(ps[1].failure_free);
  auto sps = classify_superpassages(hb.h, 1);
  REQUIRE(sps.size() == 1);  // both passages in one super-passage
  CHECK(sps[0].passages.size() == 2);
  CHECK_FALSE(sps[0].failure_free);  // more than one passage
  CHECK(sps[0].complete);
}

TEST_CASE("crash in NCS creates no passage") {
  // hand-built 6-event history: a full passage, an NCS crash, another passage
  HistoryBuilder hb(1);
  hb.passage(1);
  hb.step(1);
  hb.crash(1);
  hb.passage(1);
  auto ps = classify_passages(hb.h, 1);
  REQUIRE(ps.size() == 2);
  CHECK(ps[0].failure_free);
  CHECK(ps[1].failure_free);
  auto sps = classify_superpassages(hb.h, 1);
  CHECK(sps.size() == 2);  // the NCS crash does not join them
}

TEST_CASE("three crashes then success form one super-passage of four passages") {
  HistoryBuilder hb(1);
  for (int i = 0; i < 3; ++i) {
    hb.mk(1, Mk::RecoverBegin).mk(1, Mk::EnterBegin);
    hb.crash(1);
  }
  hb.passage(1);
  auto sps = classify_superpassages(hb.h, 1);
  REQUIRE(sps.size() == 1);
  CHECK(sps[0].passages.size() == 4);
  CHECK(sps[0].complete);
  CHECK_FALSE(sps[0].failure_free);
}

TEST_CASE("history ending mid-Enter marks the super-passage incomplete") {
  HistoryBuilder hb(1);
  hb.mk(1, Mk::RecoverBegin).mk(1, Mk::EnterBegin).step(1);
  auto sps = classify_superpassages(hb.h, 1);
  REQUIRE(sps.size() == 1);
  CHECK_FALSE(sps[0].complete);
}

TEST_CASE("failure-free super-passage iff exactly one passage") {
  // property over a seeded sweep
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    BenchCfg cfg;
    cfg.n = 3;
    cfg.stack = "wr";
    cfg.requests = 2;
    Bench b = make_bench(cfg);
    SchedulerCfg sched;
    sched.seed = seed;
    sched.crash_prob = 0.05;
    sched.crash_budget_per_sp = 2;
    run(*b.sim, sched);
    for (const SuperPassage& sp : classify_superpassages(b.sim->history(), b.top_id)) {
      if (!sp.complete) continue;
      CHECK(sp.failure_free == (sp.passages.size() == 1));
    }
  }
}

TEST_CASE("malformed marker streams are rejected") {
  HistoryBuilder hb(1);
  hb.mk(1, Mk::RecoverBegin).mk(1, Mk::CsBegin);  // CsBegin without EnterBegin
  CHECK_THROWS_AS(classify_passages(hb.h, 1), MalformedHistory);

  HistoryBuilder hb2(1);
  hb2.mk(1, Mk::RecoverBegin).mk(1, Mk::RecoverBegin);
  CHECK_THROWS_AS(classify_passages(hb2.h, 1), MalformedHistory);
}

TEST_CASE("crash in waiting-room spin is safe; sensitive window crash is not") {
  // drive p2 into the waiting room behind p1 and crash it: safe
  BenchCfg cfg;
  cfg.n = 2;
  cfg.stack = "wr";
  Bench b = make_bench(cfg);
  Sim& sim = *b.sim;
  while (!b.passage_programs[0]->in_cs()) sim.turn(1);
  // p2 past the doorway (persist done) into the spin
  for (int i = 0; i < 30; ++i) sim.turn(2);
  std::vector<LockId> s;
  b.top->collect_sensitive(2, s);
  CHECK(s.empty());  // spinning is outside the sensitive window
  sim.crash(2);
  History h = sim.history();
  auto fails = Analysis(h, b.top_id).failures();
  REQUIRE(fails.size() == 1);
  CHECK(fails[0].unsafe_for.empty());
}

TEST_CASE("strongly recoverable locks never classify a failure unsafe") {
  for (const char* stack : {"base", "semi", "super"}) {
    BenchCfg cfg;
    cfg.n = 2;
    cfg.stack = stack;
    Bench b = make_bench(cfg);
    Sim& sim = *b.sim;
    // the only sensitive window in the composite belongs to wr filters;
    // crash at every step of a solo passage and check attribution
    for (int i = 0; i < 10; ++i) sim.turn(1);
    sim.crash(1);
    History h = sim.history();
    for (const Event& e : h.events) {
      if (e.kind != Ev::Crash) continue;
      for (LockId l : e.unsafe_for) {
        // only ever a wrlock filter, never the arbitrator/tournament/semi ids
        bool is_filter = false;
        for (const LockInfo& li : h.locks)
          if (li.id == l && li.kind == "wrlock") is_filter = true;
        CHECK(is_filter);
      }
    }
  }
}
