#include "rme/sim.hpp"

#include <algorithm>
#include <cassert>
#include <unordered_map>

namespace rme {

// -- NodeTable ------------------------------------------------------------

Word NodeTable::create(Memory& mem, Pid owner) {
  Node n;
  n.locked = mem.alloc(owner, 1);  // armed: spin until a predecessor clears it
  n.next = mem.alloc(owner, kNil);
  n.owner = owner;
  n.gen = 0;
  n.live = true;
  nodes_.push_back(n);
  return make_node_ref(static_cast<std::uint32_t>(nodes_.size() - 1), 0);
}

Word NodeTable::ref(std::uint32_t index) const {
  return make_node_ref(index, nodes_.at(index).gen);
}

const NodeTable::Node& NodeTable::get(Word ref) const {
  if (!is_node_ref(ref)) throw UnknownWord("value is not a node reference");
  std::uint32_t idx = node_index(ref);
  if (idx >= nodes_.size()) throw UnknownWord("node index out of range");
  const Node& n = nodes_[idx];
  if (node_gen(ref) != n.gen)
    throw PoisonAccess("stale node reference (slot reclaimed)");
  return n;
}

void NodeTable::save(Buf& out) const {
  out.u32(static_cast<std::uint32_t>(nodes_.size()));
  for (const Node& n : nodes_) {
    out.u32(n.locked);
    out.u32(n.next);
    out.u32(n.owner);
    out.u32(n.gen);
    out.u8(n.live ? 1 : 0);
  }
}

void NodeTable::load(BufReader& in) {
  std::uint32_t count = in.u32();
  nodes_.resize(count);
  for (Node& n : nodes_) {
    n.locked = in.u32();
    n.next = in.u32();
    n.owner = in.u32();
    n.gen = in.u32();
    n.live = in.u8() != 0;
  }
}

std::vector<NodeInfo> NodeTable::describe() const {
  std::vector<NodeInfo> out;
  for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    out.push_back(NodeInfo{make_node_ref(i, n.gen), n.locked, n.next, n.owner});
  }
  return out;
}

// -- Sim -------------------------------------------------------------------

Sim::Sim(std::uint32_t n, RmrModel model)
    : n_(n),
      mem_(n, model),
      progs_(n + 1, nullptr),
      crashed_(n + 1, 0),
      sp_open_(n + 1, 0),
      sp_crashes_(n + 1, 0),
      rmr_(n + 1, 0) {}

LockId Sim::register_lock(const std::string& name, const std::string& kind, std::uint32_t level) {
  LockId id = static_cast<LockId>(lock_table_.size() + 1);
  lock_table_.push_back(LockInfo{id, name, kind, level});
  return id;
}

void Sim::set_lock_words(LockId id, WordId tail, std::vector<WordId> preds) {
  for (LockInfo& li : lock_table_) {
    if (li.id == id) {
      li.tail_word = tail;
      li.pred_words = std::move(preds);
      return;
    }
  }
}

void Sim::watch_lock(RecoverableLock* lock) { watched_.push_back(lock); }

void Sim::attach(Pid pid, Program* prog) { progs_.at(pid) = prog; }

void Sim::emit(Event e) {
  e.seq = next_seq_++;
  if (e.rmr) rmr_[e.pid]++;
  events_.push_back(std::move(e));
}

Word Sim::read(WordId w) {
  assert(cur_ != 0 && instr_count_ == 0);
  AccessResult r = mem_.access(cur_, Op::Read, w);
  Event e;
  e.pid = cur_;
  e.kind = Ev::Read;
  e.word = w;
  e.val = r.value;
  e.rmr = r.rmr;
  emit(std::move(e));
  instr_count_++;
  return r.value;
}

void Sim::write(WordId w, Word v) {
  assert(cur_ != 0 && instr_count_ == 0);
  AccessResult r = mem_.access(cur_, Op::Write, w, v);
  Event e;
  e.pid = cur_;
  e.kind = Ev::Write;
  e.word = w;
  e.val = v;
  e.rmr = r.rmr;
  emit(std::move(e));
  instr_count_++;
}

bool Sim::cas(WordId w, Word expect, Word desired) {
  assert(cur_ != 0 && instr_count_ == 0);
  AccessResult r = mem_.access(cur_, Op::Cas, w, expect, desired);
  Event e;
  e.pid = cur_;
  e.kind = Ev::Cas;
  e.word = w;
  e.arg = expect;
  e.val = r.value;
  e.ok = r.ok;
  e.rmr = r.rmr;
  emit(std::move(e));
  instr_count_++;
  return r.ok;
}

Word Sim::fas(WordId w, Word v) {
  assert(cur_ != 0 && instr_count_ == 0);
  AccessResult r = mem_.access(cur_, Op::Fas, w, v);
  Event e;
  e.pid = cur_;
  e.kind = Ev::Fas;
  e.word = w;
  e.arg = v;
  e.val = r.value;
  e.rmr = r.rmr;
  emit(std::move(e));
  instr_count_++;
  return r.value;
}

void Sim::local() {
  assert(cur_ != 0 && instr_count_ == 0);
  Event e;
  e.pid = cur_;
  e.kind = Ev::Local;
  emit(std::move(e));
  instr_count_++;
}

void Sim::marker(Mk mk, LockId lock) {
  assert(cur_ != 0);
  Event e;
  e.pid = cur_;
  e.kind = Ev::Marker;
  e.marker = mk;
  e.lock = lock;
  emit(std::move(e));
}

bool Sim::turn(Pid pid) {
  if (crashed_.at(pid)) {
    restart(pid);
    return true;
  }
  cur_ = pid;
  instr_count_ = 0;
  std::size_t before = events_.size();
  bool progressed = progs_.at(pid)->turn(*this, pid);
  if (progressed && events_.size() == before) {
    local();  // pure-decision turn
  }
  cur_ = 0;
  return progressed;
}

void Sim::crash(Pid pid) {
  if (crashed_.at(pid)) throw DoubleCrash("crash of an already-crashed process");
  Event e;
  e.pid = pid;
  e.kind = Ev::Crash;
  for (RecoverableLock* l : watched_) l->collect_sensitive(pid, e.unsafe_for);
  // Locality: a crash can be sensitive for at most one component lock.
  assert(e.unsafe_for.size() <= 1);

  OpenFailure f;
  f.unsafe_for = e.unsafe_for;
  for (Pid p = 1; p <= n_; ++p)
    if (sp_open_[p]) f.awaiting |= 1u << (p - 1);
  open_failures_.push_back(std::move(f));
  total_crashes_++;

  cur_ = pid;
  emit(std::move(e));
  cur_ = 0;

  crashed_[pid] = 1;
  if (sp_open_[pid]) sp_crashes_[pid]++;
  mem_.drop_cached(pid);
  progs_.at(pid)->on_crash(*this, pid);
}

void Sim::restart(Pid pid) {
  if (!crashed_.at(pid)) throw RestartWithoutCrash("restart of a live process");
  crashed_[pid] = 0;
  cur_ = pid;
  Event e;
  e.pid = pid;
  e.kind = Ev::Restart;
  emit(std::move(e));
  cur_ = 0;
}

bool Sim::finished(Pid pid) const {
  return !crashed_.at(pid) && progs_.at(pid)->finished(*this, pid);
}

bool Sim::all_finished() const {
  for (Pid p = 1; p <= n_; ++p)
    if (!finished(p)) return false;
  return true;
}

void Sim::sp_begin(Pid pid) {
  sp_open_.at(pid) = 1;
  sp_crashes_.at(pid) = 0;
}

void Sim::sp_end(Pid pid) {
  sp_open_.at(pid) = 0;
  const std::uint32_t bit = 1u << (pid - 1);
  for (OpenFailure& f : open_failures_) f.awaiting &= ~bit;
  // drop closed consequence intervals
  open_failures_.erase(
      std::remove_if(open_failures_.begin(), open_failures_.end(),
                     [](const OpenFailure& f) { return f.awaiting == 0; }),
      open_failures_.end());
}

std::uint32_t Sim::active_unsafe_ci(LockId lock) const {
  std::uint32_t count = 0;
  for (const OpenFailure& f : open_failures_) {
    if (f.awaiting == 0) continue;
    for (LockId l : f.unsafe_for)
      if (l == lock) count++;
  }
  return count;
}

History Sim::history() const {
  History h;
  h.n = n_;
  h.model = mem_.model().kind == MemModel::CC ? "cc" : "dsm";
  h.strong_cc = mem_.model().failed_cas_invalidates;
  h.seed = seed_note_;
  h.locks = lock_table_;
  h.nodes = nodes_.describe();
  h.events = events_;
  return h;
}

void Sim::save(Buf& out) const {
  mem_.save(out);
  nodes_.save(out);
  for (Pid p = 1; p <= n_; ++p) {
    out.u8(crashed_[p]);
    out.u8(sp_open_[p]);
    out.u32(sp_crashes_[p]);
    out.u64(rmr_[p]);
    progs_[p]->save(out);
  }
  for (RecoverableLock* l : watched_) l->save(out);
  out.u32(static_cast<std::uint32_t>(open_failures_.size()));
  for (const OpenFailure& f : open_failures_) {
    out.u32(f.awaiting);
    out.u32(static_cast<std::uint32_t>(f.unsafe_for.size()));
    for (LockId l : f.unsafe_for) out.u32(l);
  }
  out.u32(total_crashes_);
  out.u64(next_seq_);
  out.u32(static_cast<std::uint32_t>(events_.size()));
}

void Sim::load(BufReader& in) {
  mem_.load(in);
  nodes_.load(in);
  for (Pid p = 1; p <= n_; ++p) {
    crashed_[p] = in.u8();
    sp_open_[p] = in.u8();
    sp_crashes_[p] = in.u32();
    rmr_[p] = in.u64();
    progs_[p]->load(in);
  }
  for (RecoverableLock* l : watched_) l->load(in);
  open_failures_.clear();
  std::uint32_t nfail = in.u32();
  for (std::uint32_t i = 0; i < nfail; ++i) {
    OpenFailure f;
    f.awaiting = in.u32();
    std::uint32_t nl = in.u32();
    for (std::uint32_t k = 0; k < nl; ++k) f.unsafe_for.push_back(in.u32());
    open_failures_.push_back(std::move(f));
  }
  total_crashes_ = in.u32();
  next_seq_ = in.u64();
  std::uint32_t nevents = in.u32();
  events_.resize(nevents);
}

std::string Sim::canonical_state() const {
  Buf b;
  for (WordId w = 0; w < mem_.size(); ++w) {
    b.u64(mem_.peek(w));
    b.u8(mem_.freed(w) ? 1 : 0);
    if (mem_.model().kind == MemModel::CC) b.u32(mem_.cached_mask(w));
  }
  for (std::uint32_t i = 0; i < nodes_.count(); ++i) b.u32(nodes_.at(i).gen);
  for (Pid p = 1; p <= n_; ++p) {
    b.u8(crashed_[p]);
    b.u8(sp_open_[p]);
    b.u32(sp_crashes_[p]);
    progs_[p]->save(b);
  }
  for (RecoverableLock* l : watched_) l->save(b);
  b.u32(static_cast<std::uint32_t>(open_failures_.size()));
  for (const OpenFailure& f : open_failures_) {
    b.u32(f.awaiting);
    for (LockId l : f.unsafe_for) b.u32(l);
  }
  return std::move(b.bytes);
}

// -- run loop ---------------------------------------------------------------

RunResult run(Sim& sim, const SchedulerCfg& cfg, const RunLimits& limits) {
  Rng rng(cfg.seed ^ 0x5eedULL);
  const std::uint32_t n = sim.n();
  std::vector<std::uint64_t> last_turn(n + 1, 0);
  RunResult res;

  for (std::uint64_t t = 1; t <= limits.max_steps; ++t) {
    if (sim.all_finished()) {
      res.steps = t - 1;
      return res;
    }

    std::vector<Pid> runnable;
    for (Pid p = 1; p <= n; ++p)
      if (!sim.finished(p)) runnable.push_back(p);
    if (runnable.empty()) {  // everyone crashed: restart one
      res.steps = t - 1;
      return res;
    }

    // forced round-robin fallback: no live process starves
    Pid pick = 0;
    std::uint64_t worst = 0;
    for (Pid p : runnable) {
      std::uint64_t gap = t - last_turn[p];
      if (gap >= std::uint64_t(cfg.fairness_window) * n && gap > worst) {
        worst = gap;
        pick = p;
      }
    }
    if (pick == 0) pick = runnable[rng.below(runnable.size())];
    last_turn[pick] = t;

    if (sim.live(pick) && cfg.crash_prob > 0.0 && sim.sp_open(pick) &&
        sim.sp_crashes(pick) < cfg.crash_budget_per_sp &&
        sim.total_crashes() < cfg.total_crash_budget && rng.chance(cfg.crash_prob)) {
      sim.crash(pick);
      continue;
    }
    sim.turn(pick);
  }
  res.status = RunStatus::LimitExceeded;
  res.steps = limits.max_steps;
  return res;
}

}  // namespace rme
