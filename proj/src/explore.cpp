#include "rme/explore.hpp"

#include <unordered_map>

namespace rme {

namespace {

struct Hash128 {
  std::uint64_t a, b;
  bool operator==(const Hash128& o) const { return a == o.a && b == o.b; }
};
struct Hash128Hasher {
  std::size_t operator()(const Hash128& h) const { return h.a ^ (h.b * 0x9e3779b97f4a7c15ull); }
};

Hash128 fingerprint(const std::string& s) {
  std::uint64_t a = 0xcbf29ce484222325ull, b = 0x84222325cbf29ce4ull;
  for (unsigned char c : s) {
    a = (a ^ c) * 0x100000001b3ull;
    b = (b ^ c) * 0x100000001b5ull;
  }
  return Hash128{a, b};
}

}  // namespace

ExploreResult explore(Sim& sim, const ExploreCfg& cfg, const std::vector<StateCheck>& checks) {
  ExploreResult res;
  std::unordered_map<Hash128, std::uint32_t, Hash128Hasher> seen;  // state -> min depth

  struct Frame {
    Buf snapshot;
    std::uint32_t depth;
    std::uint32_t crashes;
    std::uint32_t next_move;  // 0..n-1: turn of pid; n..2n-1: crash of pid
  };
  std::vector<Frame> stack;
  const std::uint32_t n = sim.n();

  auto visit = [&](std::uint32_t depth, std::uint32_t crashes) -> bool {
    // returns true when the state should be expanded
    for (const StateCheck& c : checks) c(sim);
    std::string canon = sim.canonical_state();
    if (cfg.collect_states) res.collected.insert(canon);
    Buf crash_key;
    crash_key.u32(crashes);
    Hash128 fp = fingerprint(canon + crash_key.bytes);
    auto it = seen.find(fp);
    if (it != seen.end() && it->second <= depth) return false;
    seen[fp] = depth;
    res.states++;
    if (depth >= cfg.max_depth) {
      res.depth_exhausted = true;
      return false;
    }
    return true;
  };

  if (visit(0, 0)) {
    Frame f;
    sim.save(f.snapshot);
    f.depth = 0;
    f.crashes = 0;
    f.next_move = 0;
    stack.push_back(std::move(f));
  }

  while (!stack.empty()) {
    if (res.states > cfg.max_states) {
      res.truncated = true;
      break;
    }
    Frame& f = stack.back();
    const std::uint32_t total_moves = 2 * n;
    if (f.next_move >= total_moves) {
      stack.pop_back();
      continue;
    }
    std::uint32_t move = f.next_move++;

    BufReader r{f.snapshot.bytes};
    sim.load(r);

    bool did = false;
    std::uint32_t crashes = f.crashes;
    try {
      if (move < n) {
        Pid p = move + 1;
        if (!sim.finished(p)) {
          sim.turn(p);
          did = true;
        }
      } else {
        Pid p = move - n + 1;
        bool allowed = (cfg.crash_pid_mask >> (p - 1)) & 1;
        if (allowed && crashes < cfg.crash_budget && sim.live(p) && !sim.finished(p)) {
          sim.crash(p);
          crashes++;
          did = true;
        }
      }
      if (!did) continue;
      res.transitions++;

      if (visit(f.depth + 1, crashes)) {
        Frame nf;
        sim.save(nf.snapshot);
        nf.depth = f.depth + 1;
        nf.crashes = crashes;
        nf.next_move = 0;
        stack.push_back(std::move(nf));
      }
    } catch (const SimFault& e) {
      res.violation = e.what();
      break;
    }
  }
  return res;
}

namespace {

void naive_rec(Sim& sim, std::uint32_t depth, std::uint32_t budget,
               std::set<std::string>& out) {
  out.insert(sim.canonical_state());
  if (depth == 0) return;
  const std::uint32_t n = sim.n();
  Buf snap;
  sim.save(snap);
  for (Pid p = 1; p <= n; ++p) {
    {
      BufReader r{snap.bytes};
      sim.load(r);
    }
    if (!sim.finished(p)) {
      sim.turn(p);
      naive_rec(sim, depth - 1, budget, out);
    }
  }
  for (Pid p = 1; p <= n && budget > 0; ++p) {
    {
      BufReader r{snap.bytes};
      sim.load(r);
    }
    if (sim.live(p) && !sim.finished(p)) {
      sim.crash(p);
      naive_rec(sim, depth - 1, budget - 1, out);
    }
  }
  BufReader r{snap.bytes};
  sim.load(r);
}

}  // namespace

std::set<std::string> naive_enumerate(Sim& sim, std::uint32_t depth, std::uint32_t crash_budget) {
  std::set<std::string> out;
  naive_rec(sim, depth, crash_budget, out);
  return out;
}

StateCheck check_single_cs(const std::vector<PassageProgram*>& progs) {
  return [progs](const Sim&) {
    std::uint32_t in_cs = 0;
    for (const PassageProgram* p : progs)
      if (p->in_cs()) in_cs++;
    if (in_cs > 1) throw SimFault("mutual exclusion violated: " + std::to_string(in_cs) + " in CS");
  };
}

StateCheck check_responsive_state(const std::vector<PassageProgram*>& progs, LockId wr_lock) {
  return [progs, wr_lock](const Sim& sim) {
    std::uint32_t in_cs = 0;
    for (const PassageProgram* p : progs)
      if (p->in_cs()) in_cs++;
    std::uint32_t allowed = 1 + sim.active_unsafe_ci(wr_lock);
    if (in_cs > allowed)
      throw SimFault("responsiveness violated: " + std::to_string(in_cs) + " in CS with " +
                     std::to_string(allowed - 1) + " active unsafe consequence intervals");
  };
}

StateCheck check_lock_state(RecoverableLock* lock) {
  return [lock](const Sim& sim) { lock->check_invariants(sim); };
}

}  // namespace rme
