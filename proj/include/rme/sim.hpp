#ifndef RME_SIM_HPP
#define RME_SIM_HPP

#include <memory>
#include <string>
#include <vector>

#include "rme/event.hpp"
#include "rme/lock.hpp"
#include "rme/memory.hpp"
#include "rme/types.hpp"

namespace rme {

class Sim;

// One simulated process body. turn() advances the process by exactly one
// instruction event (markers ride along); returns false when the process is
// parked with nothing to do.
class Program {
 public:
  virtual ~Program() = default;
  virtual bool turn(Sim& sim, Pid pid) = 0;
  virtual void on_crash(Sim& sim, Pid pid) = 0;
  virtual void save(Buf& out) const = 0;
  virtual void load(BufReader& in) = 0;
  // True once the process has no further work (run() halts when all agree).
  virtual bool finished(const Sim& sim, Pid pid) const = 0;
};

// WR-Lock queue nodes: a (locked, next) word pair with an owner. Slots are
// reusable; the generation is bumped when a pool slot is reclaimed so stale
// references fault deterministically instead of reading recycled memory.
class NodeTable {
 public:
  struct Node {
    WordId locked = 0;
    WordId next = 0;
    Pid owner = 0;
    std::uint32_t gen = 0;
    bool live = false;
  };

  Word create(Memory& mem, Pid owner);         // fresh slot, gen 0
  Word ref(std::uint32_t index) const;         // current-generation reference
  const Node& get(Word ref) const;             // faults on stale generation
  void bump_gen(std::uint32_t index) { nodes_.at(index).gen++; }
  std::uint32_t count() const { return static_cast<std::uint32_t>(nodes_.size()); }
  const Node& at(std::uint32_t index) const { return nodes_.at(index); }

  void save(Buf& out) const;
  void load(BufReader& in);
  std::vector<NodeInfo> describe() const;

 private:
  std::vector<Node> nodes_;
};

// Deterministic single-host interpreter over n simulated processes. One
// process turn = one instruction event plus any markers attached to it;
// crashes and restarts are injected between turns.
class Sim {
 public:
  Sim(std::uint32_t n, RmrModel model);

  std::uint32_t n() const { return n_; }
  Memory& mem() { return mem_; }
  const Memory& mem() const { return mem_; }
  NodeTable& nodes() { return nodes_; }
  const NodeTable& nodes() const { return nodes_; }

  WordId alloc_word(Pid home, Word init) { return mem_.alloc(home, init); }

  LockId register_lock(const std::string& name, const std::string& kind, std::uint32_t level = 0);
  void set_lock_words(LockId id, WordId tail, std::vector<WordId> preds);
  void watch_lock(RecoverableLock* lock);  // sensitive-window sources for crash tagging
  const std::vector<LockInfo>& lock_table() const { return lock_table_; }

  void attach(Pid pid, Program* prog);

  // --- instruction API (valid only inside a turn) ---
  Word read(WordId w);
  void write(WordId w, Word v);
  bool cas(WordId w, Word expect, Word desired);
  Word fas(WordId w, Word v);
  void local();  // explicit local computation step
  void marker(Mk mk, LockId lock);
  Pid self() const { return cur_; }
  bool budget_left() const { return instr_count_ == 0; }  // one instruction per turn

  // --- turn engine ---
  bool turn(Pid pid);          // one step of a live process
  void crash(Pid pid);         // between turns only
  void restart(Pid pid);
  bool live(Pid pid) const { return !crashed_.at(pid); }
  bool finished(Pid pid) const;
  bool all_finished() const;

  // super-passage bookkeeping (driven by programs; feeds crash budgets and
  // the explorer's consequence-interval predicate)
  void sp_begin(Pid pid);
  void sp_end(Pid pid);
  bool sp_open(Pid pid) const { return sp_open_.at(pid); }
  std::uint32_t sp_crashes(Pid pid) const { return sp_crashes_.at(pid); }

  // state predicates over open failures (for in-flight responsiveness checks)
  std::uint32_t active_unsafe_ci(LockId lock) const;
  std::uint32_t total_crashes() const { return total_crashes_; }

  std::uint64_t rmr_count(Pid pid) const { return rmr_.at(pid); }

  const std::vector<Event>& events() const { return events_; }
  History history() const;
  void set_seed_note(std::uint64_t seed) { seed_note_ = seed; }

  // exact snapshot of the entire simulation (memory, nodes, locks, programs)
  void save(Buf& out) const;
  void load(BufReader& in);

  // canonical fingerprint for state memoization (node refs renumbered by
  // first appearance; event log and counters excluded)
  std::string canonical_state() const;

 private:
  void emit(Event e);

  std::uint32_t n_;
  Memory mem_;
  NodeTable nodes_;
  std::vector<Program*> progs_;       // 1..n (index 0 unused)
  std::vector<RecoverableLock*> watched_;
  std::vector<LockInfo> lock_table_;

  std::vector<std::uint8_t> crashed_;  // 1..n
  std::vector<std::uint8_t> sp_open_;
  std::vector<std::uint32_t> sp_crashes_;
  std::vector<std::uint64_t> rmr_;

  struct OpenFailure {
    std::vector<LockId> unsafe_for;
    std::uint32_t awaiting = 0;  // bitmask of pids whose then-current SP is still open
  };
  std::vector<OpenFailure> open_failures_;
  std::uint32_t total_crashes_ = 0;

  std::vector<Event> events_;
  Seq next_seq_ = 1;
  Pid cur_ = 0;
  std::uint32_t instr_count_ = 0;
  std::uint64_t seed_note_ = 0;
};

// -- run loop -----------------------------------------------------------

struct SchedulerCfg {
  std::uint64_t seed = 1;
  double crash_prob = 0.0;
  std::uint32_t crash_budget_per_sp = 0;
  std::uint32_t total_crash_budget = ~0u;
  std::uint32_t fairness_window = 8;  // K: forced turn after K*n starved turns
};

struct RunLimits {
  std::uint64_t max_steps = 200000;
};

enum class RunStatus : std::uint8_t { Completed, LimitExceeded };

struct RunResult {
  RunStatus status = RunStatus::Completed;
  std::uint64_t steps = 0;
};

RunResult run(Sim& sim, const SchedulerCfg& cfg, const RunLimits& limits = {});

}  // namespace rme

#endif
