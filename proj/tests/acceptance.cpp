// Acceptance gate: every criterion runs at its stated tolerance and prints
// one pass/fail line. Exit code is non-zero if any criterion fails.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "broadcast_harness.hpp"
#include "rme/checker.hpp"
#include "rme/experiment.hpp"
#include "rme/explore.hpp"
#include "rme/scenario.hpp"

using namespace rme;
using namespace rme::bcharness;

namespace {

int failures = 0;

void report(int idx, const char* name, bool ok, const std::string& detail = "") {
  std::printf("%s — criterion %d: %s%s%s\n", ok ? "PASS" : "FAIL", idx, name,
              detail.empty() ? "" : " — ", detail.c_str());
  std::fflush(stdout);
  if (!ok) failures++;
}

BenchCfg cfg_of(const char* stack, std::uint32_t n, std::uint32_t requests, MemModel m,
                std::uint32_t levels = 0, bool reclaim = false) {
  BenchCfg cfg;
  cfg.stack = stack;
  cfg.n = n;
  cfg.requests = requests;
  cfg.model = RmrModel{m, true};
  cfg.levels = levels;
  cfg.reclamation = reclaim;
  return cfg;
}

// ---- 1. exhaustive safety --------------------------------------------------

struct ArbDriver : Program {
  ArbDriver(Arbitrator* arb, Arbitrator::Side side, std::uint32_t requests)
      : arb_(arb), side_(side), requests_(requests) {}
  bool turn(Sim& sim, Pid pid) override {
    if (done_ >= requests_) return false;
    switch (phase_) {
      case 0:
        if (arb_->acquire_step(sim, pid, side_)) phase_ = 1;
        return true;
      case 1:
        sim.local();
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
    phase_ = 0;
  }
  bool finished(const Sim&, Pid) const override { return done_ >= requests_; }
  void save(Buf& out) const override {
    out.u8(phase_);
    out.u32(done_);
    if (side_ == Arbitrator::kLeft) arb_->save(out);
  }
  void load(BufReader& in) override {
    phase_ = in.u8();
    done_ = in.u32();
    if (side_ == Arbitrator::kLeft) arb_->load(in);
  }
  Arbitrator* arb_;
  Arbitrator::Side side_;
  std::uint32_t requests_;
  std::uint8_t phase_ = 0;
  std::uint32_t done_ = 0;
};

std::string explore_arbitrator(std::uint32_t budget, std::uint32_t depth) {
  Sim sim(2, RmrModel{MemModel::DSM, true});
  Arbitrator arb(sim, "arb");
  ArbDriver p1(&arb, Arbitrator::kLeft, 2);
  ArbDriver p2(&arb, Arbitrator::kRight, 2);
  sim.attach(1, &p1);
  sim.attach(2, &p2);
  ExploreCfg ec;
  ec.max_depth = depth;
  ec.crash_budget = budget;
  ExploreResult r = explore(sim, ec, {[&](const Sim& s) { arb.check_invariants(s); }});
  return r.violation;
}

std::string explore_stack(const char* stack, std::uint32_t n, std::uint32_t budget,
                          std::uint32_t depth, std::uint32_t levels = 0) {
  Bench b = make_bench(cfg_of(stack, n, 1, MemModel::DSM, levels));
  ExploreCfg ec;
  ec.max_depth = depth;
  ec.crash_budget = budget;
  ExploreResult r =
      explore(*b.sim, ec, {check_single_cs(b.passage_programs), check_lock_state(b.top)});
  return r.violation;
}

void criterion1() {
  std::string bad;
  auto merge = [&](const char* what, const std::string& v) {
    if (!v.empty() && bad.empty()) bad = std::string(what) + ": " + v;
  };
  for (std::uint32_t budget : {1u, 2u}) {
    merge("arbitrator n=2", explore_arbitrator(budget, 50));
    merge("tournament n=2", explore_stack("base", 2, budget, 50));
    merge("semi n=2", explore_stack("semi", 2, budget, 50));
    merge("super n=2 L=2", explore_stack("super", 2, budget, 50, 2));
  }
  // n=3 where the state space permits
  merge("tournament n=3 b=2", explore_stack("base", 3, 2, 36));
  merge("semi n=3 b=1", explore_stack("semi", 3, 1, 36));
  merge("super n=3 b=1 L=2", explore_stack("super", 3, 1, 36, 2));
  report(1, "exhaustive safety (ME + step bounds, crash budget <= 2)", bad.empty(), bad);
}

// ---- 2. responsiveness -------------------------------------------------------

void criterion2() {
  std::string bad;
  std::uint64_t runs = 0;
  for (std::uint64_t seed = 1; seed <= 10000 && bad.empty(); ++seed) {
    std::uint32_t n = 2 + (seed % 7);  // n <= 8
    RunCfg rc;
    rc.bench = cfg_of("wr", n, 2, MemModel::DSM);
    rc.seed = seed;
    rc.crash_prob = 0.05;
    rc.crash_budget_per_sp = 2;
    SeededRun r = run_seeded(rc);
    runs++;
    LockId top = r.history.lock_by_name("wr")->id;
    auto v = check_responsiveness(r.history, top);
    if (!v.ok) bad = "seed " + std::to_string(seed) + " violates the bound";
  }
  if (bad.empty()) {
    Bench b = make_bench(cfg_of("wr", 2, 1, MemModel::DSM));
    ExploreCfg ec;
    ec.max_depth = 50;
    ec.crash_budget = 2;
    ExploreResult r =
        explore(*b.sim, ec, {check_responsive_state(b.passage_programs, b.top_id)});
    if (!r.violation.empty()) bad = "exhaustive n=2: " + r.violation;
  }
  report(2, "responsiveness over 10^4 seeded runs + exhaustive n=2", bad.empty(),
         bad.empty() ? std::to_string(runs) + " runs clean" : bad);
}

// ---- 3. failure-free constantness (PM1) ---------------------------------------

void criterion3() {
  std::string detail;
  bool ok = true;
  for (MemModel m : {MemModel::CC, MemModel::DSM}) {
    std::vector<std::uint64_t> maxima;
    for (std::uint32_t n : {2u, 4u, 8u, 16u}) {
      std::uint64_t worst = 0;
      for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        RunCfg rc;
        rc.bench = cfg_of("super", n, 2, m);
        rc.seed = seed;
        SeededRun r = run_seeded(rc);
        LockId top = r.history.lock_by_name("super.L1")->id;
        for (const MetricsRow& row : metrics(r.history, top))
          if (row.failure_free) worst = std::max(worst, row.rmr);
      }
      maxima.push_back(worst);
    }
    for (std::uint64_t v : maxima)
      if (v != maxima[0]) ok = false;
    detail += std::string(m == MemModel::CC ? "cc" : "dsm") + ":[" +
              std::to_string(maxima[0]) + "," + std::to_string(maxima[1]) + "," +
              std::to_string(maxima[2]) + "," + std::to_string(maxima[3]) + "] ";
  }
  report(3, "failure-free max passage RMR identical across n in {2,4,8,16}", ok, detail);
}

// ---- 4. escalation theorem ------------------------------------------------------

void criterion4() {
  std::string bad;
  for (std::uint32_t x = 2; x <= 4 && bad.empty(); ++x) {
    History h = scenario_escalation(x, 4, RmrModel{MemModel::DSM, true}, 4);
    LockId top = h.lock_by_name("super.L1")->id;
    if (!check_me(h, top).empty()) {
      bad = "x=" + std::to_string(x) + ": ME violated";
      break;
    }
    bool reached = false;
    for (const MetricsRow& r : metrics(h, top)) {
      std::uint64_t d = r.deepest_level;
      if (d >= x) reached = true;
      if (r.failure_density < d * (d - 1) / 2)
        bad = "x=" + std::to_string(x) + ": failure density below x(x-1)/2";
      if (r.point_contention < d) bad = "x=" + std::to_string(x) + ": contention below x";
    }
    if (!reached) bad = "x=" + std::to_string(x) + ": scripted level not reached";
  }
  report(4, "escalation: F >= x(x-1)/2 and contention >= x, x up to 4", bad.empty(), bad);
}

// ---- 5. adaptive envelope ---------------------------------------------------------

void criterion5() {
  std::string detail;
  bool ok = true;
  char buf[160];
  for (MemModel m : {MemModel::DSM, MemModel::CC}) {
    std::uint64_t calibration = 0;  // frozen from the n=4, F=0 cell
    std::uint64_t violations = 0, passages = 0;
    double needed_c = 0;  // smallest constant that satisfies every passage
    for (std::uint32_t n : {4u, 8u, 16u}) {
      for (std::uint32_t f = 0; f <= 12; ++f) {
        SweepCell cell = sweep_cell(cfg_of("super", n, 2, m), f, 25, 500 + f, 0.02);
        if (n == 4 && f == 0) calibration = cell.max_rmr;
        double logn = std::log2(double(n)) + 1.0;
        for (const MetricsRow& r : cell.rows) {
          passages++;
          double envelope = std::min({double(r.point_contention),
                                      std::sqrt(double(r.failure_density) + 1.0), logn});
          if (double(r.rmr) > double(calibration) * envelope) violations++;
          needed_c = std::max(needed_c, double(r.rmr) / envelope);
        }
      }
    }
    std::snprintf(buf, sizeof buf, "%s: C=%llu violations=%llu/%llu (min sufficient C=%.1f) ",
                  m == MemModel::CC ? "cc" : "dsm",
                  static_cast<unsigned long long>(calibration),
                  static_cast<unsigned long long>(violations),
                  static_cast<unsigned long long>(passages), needed_c);
    detail += buf;
    if (violations > 0) ok = false;
  }
  report(5, "passage RMR <= C*min(contention, sqrt(F+1), log2(n)+1)", ok, detail);
}

// ---- 6. broadcast ------------------------------------------------------------------

void criterion6() {
  std::string bad;
  {
    BcBench b = make_bc(3, MemModel::DSM, 1);
    SafetyCheck safety{b.owner.get(), &b.waiters};
    ExploreCfg ec;
    ec.max_depth = 72;
    ec.crash_budget = 1;
    ec.crash_pid_mask = 1;  // one owner crash
    ec.max_states = 60'000'000;
    ExploreResult r = explore(*b.sim, ec, {StateCheck(safety)});
    if (!r.violation.empty()) bad = "safety: " + r.violation;
    if (r.depth_exhausted) bad = "liveness: a schedule never quiesced";
  }
  if (bad.empty()) {
    for (MemModel m : {MemModel::CC, MemModel::DSM}) {
      BcBench b = make_bc(4, m, 5);
      Sim& sim = *b.sim;
      for (Word x = 1; x <= 5; ++x) {
        std::uint64_t before = sim.rmr_count(1);
        while (!b.obj->set_step(sim, 1, x)) {
        }
        if (sim.rmr_count(1) - before > 10) bad = "churn-free bset RMR above constant";
      }
      std::uint64_t before = sim.rmr_count(2);
      std::uint32_t steps = 0;
      while (!b.obj->wait_step(sim, 2, 5) && steps < 64) steps++;
      if (sim.rmr_count(2) - before > 10) bad = "bwait RMR above constant";
      Word out;
      before = sim.rmr_count(3);
      while (!b.obj->read_step(sim, 3, out)) {
      }
      if (sim.rmr_count(3) - before > 2) bad = "bread RMR above constant";
    }
  }
  report(6, "broadcast: exhaustive n=3 safety/liveness with one owner crash + RMR constants",
         bad.empty(), bad);
}

// ---- 7. reclamation soak -------------------------------------------------------------

void criterion7() {
  const std::uint32_t n = 4;
  Bench b = make_bench(cfg_of("wr", n, 2600, MemModel::DSM, 0, true));
  Sim& sim = *b.sim;
  Rng rng(0x50c + 7);
  std::string bad;
  const std::uint32_t node_bound = 2 * n * (3 * n + 2);
  std::uint64_t guard = 0;
  try {
    while (!sim.all_finished()) {
      if (++guard > 3'000'000) {
        bad = "soak did not complete";
        break;
      }
      Pid p = 1 + rng.below(n);
      if (sim.finished(p)) continue;
      if (sim.live(p) && sim.sp_open(p) && sim.sp_crashes(p) < 2 && rng.chance(0.02))
        sim.crash(p);
      else
        sim.turn(p);
      if (!b.reclaim->counters_invariant(sim)) {
        bad = "counter chain violated at seq " + std::to_string(sim.events().size());
        break;
      }
      if (b.reclaim->live_nodes(sim) > node_bound || sim.nodes().count() != node_bound) {
        bad = "space bound violated";
        break;
      }
    }
  } catch (const SimFault& e) {
    bad = e.what();  // PoisonAccess lands here
  }
  std::uint64_t passages = 0;
  if (bad.empty()) {
    passages = classify_passages(sim.history(), b.top_id).size();
    if (passages < 10000) bad = "only " + std::to_string(passages) + " passages";
    auto resp = check_responsiveness(sim.history(), b.top_id);
    if (!resp.ok) bad = "responsiveness violated during soak";
  }
  report(7, "reclamation soak: 10^4 passages, zero poison, bounded space, counter chain",
         bad.empty(), bad.empty() ? std::to_string(passages) + " passages" : bad);
}

// ---- 8. fairness ------------------------------------------------------------------------

void criterion8() {
  std::string bad;
  for (std::uint64_t seed = 1; seed <= 2000 && bad.empty(); ++seed) {
    RunCfg rc;
    rc.bench = cfg_of("wr", 2 + (seed % 5), 2, MemModel::DSM);
    rc.seed = seed;
    rc.crash_prob = 0.04;
    rc.crash_budget_per_sp = 2;
    SeededRun r = run_seeded(rc);
    auto rep = check_fairness(r.history, r.history.lock_by_name("wr")->id);
    if (!rep.ci_fcfs_violations.empty()) bad = "wr CI-FCFS violated";
    if (!rep.fcfs1_violations.empty()) bad = "wr 1-FCFS violated";
  }
  for (std::uint64_t seed = 1; seed <= 600 && bad.empty(); ++seed) {
    RunCfg rc;
    rc.bench = cfg_of("super", 3, 2, MemModel::DSM);
    rc.seed = seed;
    rc.crash_prob = 0.03;
    rc.crash_budget_per_sp = 2;
    SeededRun r = run_seeded(rc);
    auto rep = check_fairness(r.history, r.history.lock_by_name("super.L1")->id);
    if (!rep.ci_fcfs_violations.empty()) bad = "super CI-FCFS violated";
    if (!rep.fcfs1_violations.empty()) bad = "super 1-FCFS violated";
  }

  // the three classification probes
  if (bad.empty()) {
    struct HB {
      History h;
      Seq seq = 1;
      HB() {
        h.n = 3;
        h.model = "dsm";
        h.locks.push_back(LockInfo{1, "hand", "wrlock", 1});
      }
      void mk(Pid p, Mk m) {
        Event e;
        e.seq = seq++;
        e.pid = p;
        e.kind = Ev::Marker;
        e.marker = m;
        e.lock = 1;
        h.events.push_back(e);
      }
      void crash(Pid p) {
        Event e;
        e.seq = seq++;
        e.pid = p;
        e.kind = Ev::Crash;
        h.events.push_back(e);
      }
      void begin(Pid p) {
        mk(p, Mk::RecoverBegin);
        mk(p, Mk::EnterBegin);
        mk(p, Mk::DoorwayEnd);
      }
      void cs(Pid p) { mk(p, Mk::CsBegin); }
      void finish(Pid p) {
        mk(p, Mk::CsEnd);
        mk(p, Mk::ExitBegin);
        mk(p, Mk::ExitEnd);
      }
      void full(Pid p) {
        begin(p);
        cs(p);
        finish(p);
      }
      std::uint32_t kfc_at(Seq s) const {
        Analysis a(h, 1);
        for (std::size_t i = 0; i < a.passages().size(); ++i)
          if (a.passages()[i].start == s) return a.k_fc_levels()[i];
        return ~0u;
      }
      bool ci_at(Seq s) const {
        Analysis a(h, 1);
        for (std::size_t i = 0; i < a.passages().size(); ++i)
          if (a.passages()[i].start == s) return a.ci_concurrent(i);
        return false;
      }
    };

    {  // 1-failure-concurrent, not CI-concurrent
      HB hb;
      hb.begin(2);
      hb.cs(2);
      Seq r = hb.seq;
      hb.full(1);
      hb.crash(2);
      hb.full(2);
      if (!(hb.kfc_at(r) == 1 && !hb.ci_at(r))) bad = "probe 1FC-not-CI misclassified";
    }
    {  // CI-concurrent, not 1-failure-concurrent
      HB hb;
      hb.begin(2);
      hb.begin(3);
      hb.crash(2);
      hb.full(2);
      Seq r = hb.seq;
      hb.full(1);
      hb.cs(3);
      hb.finish(3);
      if (!(hb.ci_at(r) && hb.kfc_at(r) == 2)) bad = "probe CI-not-1FC misclassified";
    }
    {  // 2-failure-concurrent, not CI-concurrent
      HB hb;
      hb.begin(2);
      hb.crash(2);
      hb.begin(3);
      hb.full(2);
      Seq r = hb.seq;
      hb.full(1);
      hb.cs(3);
      hb.finish(3);
      if (!(hb.kfc_at(r) == 2 && !hb.ci_at(r))) bad = "probe 2FC-not-CI misclassified";
    }
  }
  report(8, "fairness: zero CI-FCFS/1-FCFS violations + the three history shapes", bad.empty(),
         bad);
}

// ---- 9. determinism / replay --------------------------------------------------------------

void criterion9() {
  std::string bad;
  for (std::uint64_t seed = 1; seed <= 50 && bad.empty(); ++seed) {
    RunCfg rc;
    rc.bench = cfg_of("super", 3, 2, MemModel::CC);
    rc.seed = seed;
    rc.crash_prob = 0.03;
    rc.crash_budget_per_sp = 2;
    SeededRun r1 = run_seeded(rc);
    SeededRun r2 = run_seeded(rc);
    std::string t1 = history_to_string(r1.history);
    if (t1 != history_to_string(r2.history)) {
      bad = "same seed produced different histories";
      break;
    }
    History reloaded = history_from_string(t1);
    LockId top = r1.history.lock_by_name("super.L1")->id;
    StepBounds bounds{64, 96, 24};
    if (verdict_json(r1.history, top, bounds) != verdict_json(reloaded, top, bounds))
      bad = "replayed verdict differs";
  }
  report(9, "determinism: byte-identical histories and replayed verdicts", bad.empty(), bad);
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  if (failures == 0)
    std::printf("all acceptance criteria passed\n");
  else
    std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
