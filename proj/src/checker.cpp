#include "rme/checker.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <unordered_map>

namespace rme {

using json = nlohmann::ordered_json;

// -- passage extraction ------------------------------------------------------

void Analysis::build_passages(const History& h) {
  struct Cursor {
    bool open = false;
    Passage cur;
    int stage = 0;  // 0 recover, 1 enter, 2 cs, 3 exit
  };
  std::vector<Cursor> cursors(h.n + 1);

  auto close_by_crash = [&](Pid pid, Seq seq) {
    Cursor& c = cursors[pid];
    if (!c.open) return;
    c.cur.end = seq;
    c.cur.crash_ended = true;
    c.cur.complete = false;
    c.cur.failure_free = false;
    if (c.cur.cs_begin != kNoSeq && c.cur.cs_end == kNoSeq) {
      c.cur.cs_end = seq;
      c.cur.crashed_in_cs = true;
    }
    passages_.push_back(c.cur);
    c.open = false;
  };

  for (const Event& e : h.events) {
    last_seq_ = e.seq;
    if (e.kind == Ev::Crash) {
      close_by_crash(e.pid, e.seq);
      continue;
    }
    if (e.pid >= cursors.size()) throw MalformedHistory("pid out of range");
    Cursor& c = cursors[e.pid];
    if (c.open && e.is_instr() && e.rmr) c.cur.rmr++;
    if (e.kind != Ev::Marker || e.lock != lock_) continue;

    switch (e.marker) {
      case Mk::NcsBegin:
        if (c.open) throw MalformedHistory("NcsBegin inside a passage");
        break;
      case Mk::RecoverBegin:
        if (c.open) throw MalformedHistory("nested RecoverBegin");
        c.open = true;
        c.cur = Passage{};
        c.cur.pid = e.pid;
        c.cur.lock = lock_;
        c.cur.start = e.seq;
        c.stage = 0;
        break;
      case Mk::RecoverEnd:
        if (!c.open || c.stage != 0) throw MalformedHistory("RecoverEnd out of order");
        break;
      case Mk::EnterBegin:
        if (!c.open || c.stage != 0) throw MalformedHistory("EnterBegin out of order");
        c.stage = 1;
        c.cur.enter_begin = e.seq;
        break;
      case Mk::DoorwayEnd:
        if (!c.open || c.stage != 1) throw MalformedHistory("DoorwayEnd out of order");
        if (c.cur.doorway_end == kNoSeq) c.cur.doorway_end = e.seq;
        break;
      case Mk::CsBegin:
        if (!c.open || c.stage != 1) throw MalformedHistory("CsBegin out of order");
        c.stage = 2;
        c.cur.cs_begin = e.seq;
        break;
      case Mk::CsEnd:
        if (!c.open || c.stage != 2) throw MalformedHistory("CsEnd out of order");
        c.stage = 3;
        c.cur.cs_end = e.seq;
        break;
      case Mk::ExitBegin:
        if (!c.open || c.stage != 3) throw MalformedHistory("ExitBegin out of order");
        c.cur.exit_begin = e.seq;
        break;
      case Mk::ExitEnd:
        if (!c.open || c.cur.exit_begin == kNoSeq) throw MalformedHistory("ExitEnd out of order");
        c.cur.end = e.seq;
        c.cur.complete = true;
        c.cur.failure_free = true;  // a crash would have closed the passage
        passages_.push_back(c.cur);
        c.open = false;
        break;
    }
  }
  // history may end mid-passage
  for (Pid p = 1; p <= h.n; ++p) {
    Cursor& c = cursors[p];
    if (c.open) {
      c.cur.end = last_seq_;
      passages_.push_back(c.cur);
    }
  }
  std::sort(passages_.begin(), passages_.end(),
            [](const Passage& a, const Passage& b) { return a.start < b.start; });
}

void Analysis::build_superpassages() {
  std::vector<SuperPassage> open(h_.n + 1);
  std::vector<bool> has_open(h_.n + 1, false);
  std::vector<std::uint32_t> sp_ordinal(h_.n + 1, 0);

  for (std::size_t i = 0; i < passages_.size(); ++i) {
    Passage& p = passages_[i];
    if (!has_open[p.pid]) {
      has_open[p.pid] = true;
      open[p.pid] = SuperPassage{};
      open[p.pid].pid = p.pid;
      open[p.pid].lock = lock_;
      open[p.pid].start = p.start;
      sp_ordinal[p.pid]++;
    }
    p.sp = sp_ordinal[p.pid];
    open[p.pid].passages.push_back(i);
    if (p.complete && p.failure_free) {
      open[p.pid].end = p.end;
      open[p.pid].complete = true;
      open[p.pid].failure_free = open[p.pid].passages.size() == 1;
      sps_.push_back(open[p.pid]);
      has_open[p.pid] = false;
    }
  }
  for (Pid p = 1; p <= h_.n; ++p) {
    if (has_open[p]) {
      open[p].end = last_seq_;
      open[p].complete = false;
      open[p].failure_free = false;
      sps_.push_back(open[p]);
    }
  }
  std::sort(sps_.begin(), sps_.end(),
            [](const SuperPassage& a, const SuperPassage& b) { return a.start < b.start; });
}

void Analysis::build_failures(const History& h) {
  for (const Event& e : h.events) {
    if (e.kind != Ev::Crash) continue;
    FailureRecord f;
    f.seq = e.seq;
    f.pid = e.pid;
    f.unsafe_for = e.unsafe_for;
    f.ci_end = f.seq;
    for (const SuperPassage& sp : sps_) {
      if (sp.start < f.seq && sp.end > f.ci_end) f.ci_end = sp.end;
    }
    failures_.push_back(f);
  }
}

void Analysis::build_kfc() {
  kfc_.assign(passages_.size(), kNoK);

  // last failure-free completed passage end and crash list per pid
  std::vector<std::vector<Seq>> crashes(h_.n + 1);
  for (const FailureRecord& f : failures_) crashes[f.pid].push_back(f.seq);

  for (std::size_t i = 0; i < passages_.size(); ++i) {
    const Passage& p = passages_[i];
    bool zero = p.crash_ended;
    if (!zero) {
      Seq last_ff = 0;
      for (const Passage& q : passages_) {
        if (q.pid == p.pid && q.complete && q.failure_free && q.end < p.start)
          last_ff = std::max(last_ff, q.end);
      }
      for (Seq c : crashes[p.pid])
        if (c < p.start && c > last_ff) zero = true;
    }
    if (zero) kfc_[i] = 0;
  }

  // propagate through super-passage overlap
  auto sp_of = [&](std::size_t pi) -> const SuperPassage* {
    for (const SuperPassage& sp : sps_)
      for (std::size_t j : sp.passages)
        if (j == pi) return &sp;
    return nullptr;
  };
  std::vector<const SuperPassage*> owner(passages_.size());
  for (std::size_t i = 0; i < passages_.size(); ++i) owner[i] = sp_of(i);

  bool changed = true;
  while (changed) {
    changed = false;
    // minimal level inside each super-passage
    std::unordered_map<const SuperPassage*, std::uint32_t> sp_min;
    for (std::size_t i = 0; i < passages_.size(); ++i) {
      auto it = sp_min.find(owner[i]);
      std::uint32_t v = kfc_[i];
      if (it == sp_min.end())
        sp_min[owner[i]] = v;
      else
        it->second = std::min(it->second, v);
    }
    for (std::size_t i = 0; i < passages_.size(); ++i) {
      const SuperPassage* mine = owner[i];
      if (!mine) continue;
      for (const SuperPassage& other : sps_) {
        if (&other == mine) continue;
        if (other.start > mine->end || mine->start > other.end) continue;
        std::uint32_t om = sp_min.count(&other) ? sp_min.at(&other) : kNoK;
        if (om != kNoK && om + 1 < kfc_[i]) {
          kfc_[i] = om + 1;
          changed = true;
        }
      }
    }
  }
}

bool Analysis::ci_concurrent(std::size_t pi) const {
  const Passage& p = passages_.at(pi);
  const SuperPassage* sp = nullptr;
  for (const SuperPassage& s : sps_)
    for (std::size_t j : s.passages)
      if (j == pi) sp = &s;
  if (!sp) return false;
  for (const FailureRecord& f : failures_)
    if (f.seq <= sp->end && f.ci_end >= sp->start) return true;
  return false;
}

Analysis::Analysis(const History& h, LockId lock) : h_(h), lock_(lock) {
  build_passages(h);
  build_superpassages();
  build_failures(h);
  build_kfc();
}

std::uint64_t Analysis::failure_density(const SuperPassage& sp) const {
  std::uint64_t f = 0;
  for (const FailureRecord& fr : failures_)
    if (fr.seq <= sp.end && fr.ci_end >= sp.start) f++;
  return f;
}

std::uint64_t Analysis::point_contention(const SuperPassage& sp) const {
  // max number of super-passages simultaneously in progress during sp
  std::uint64_t best = 0;
  auto count_at = [&](Seq t) {
    std::uint64_t c = 0;
    for (const SuperPassage& s : sps_)
      if (s.start <= t && s.end >= t) c++;
    return c;
  };
  best = std::max(best, count_at(sp.start));
  for (const SuperPassage& s : sps_) {
    if (s.start >= sp.start && s.start <= sp.end) best = std::max(best, count_at(s.start));
  }
  return best;
}

std::vector<Passage> classify_passages(const History& h, LockId lock) {
  return Analysis(h, lock).passages();
}
std::vector<SuperPassage> classify_superpassages(const History& h, LockId lock) {
  return Analysis(h, lock).superpassages();
}

std::vector<FailureRecord> unsafe_failures(const History& h, LockId lock) {
  Analysis a(h, lock);
  std::vector<FailureRecord> out;
  for (const FailureRecord& f : a.failures()) {
    for (LockId l : f.unsafe_for)
      if (l == lock) out.push_back(f);
  }
  return out;
}

// -- mutual exclusion ---------------------------------------------------------

namespace {
struct CsInterval {
  Pid pid;
  Seq begin, end;
};

std::vector<CsInterval> cs_intervals(const History& h, const std::vector<LockId>& locks) {
  std::vector<CsInterval> out;
  std::vector<Seq> open_at(h.n + 1, kNoSeq);
  auto is_ours = [&](LockId l) {
    return std::find(locks.begin(), locks.end(), l) != locks.end();
  };
  for (const Event& e : h.events) {
    if (e.kind == Ev::Crash) {
      if (open_at[e.pid] != kNoSeq) {
        out.push_back(CsInterval{e.pid, open_at[e.pid], e.seq});
        open_at[e.pid] = kNoSeq;
      }
      continue;
    }
    if (e.kind != Ev::Marker || !is_ours(e.lock)) continue;
    if (e.marker == Mk::CsBegin) {
      if (open_at[e.pid] != kNoSeq) throw MalformedHistory("nested CsBegin");
      open_at[e.pid] = e.seq;
    } else if (e.marker == Mk::CsEnd) {
      if (open_at[e.pid] == kNoSeq) throw MalformedHistory("CsEnd without CsBegin");
      out.push_back(CsInterval{e.pid, open_at[e.pid], e.seq});
      open_at[e.pid] = kNoSeq;
    }
  }
  Seq last = h.events.empty() ? 0 : h.events.back().seq;
  for (Pid p = 1; p <= h.n; ++p)
    if (open_at[p] != kNoSeq) out.push_back(CsInterval{p, open_at[p], last});
  return out;
}
}  // namespace

std::vector<MeViolation> check_me_joint(const History& h, const std::vector<LockId>& locks) {
  std::vector<CsInterval> cs = cs_intervals(h, locks);
  std::vector<MeViolation> out;
  for (std::size_t i = 0; i < cs.size(); ++i)
    for (std::size_t j = i + 1; j < cs.size(); ++j) {
      if (cs[i].pid == cs[j].pid) continue;
      if (cs[i].begin <= cs[j].end && cs[j].begin <= cs[i].end)
        out.push_back(MeViolation{std::max(cs[i].begin, cs[j].begin), cs[i].pid, cs[j].pid});
    }
  std::sort(out.begin(), out.end(), [](const MeViolation& a, const MeViolation& b) {
    return a.at < b.at;
  });
  return out;
}

std::vector<MeViolation> check_me(const History& h, LockId lock) {
  return check_me_joint(h, {lock});
}

ResponsivenessVerdict check_responsiveness(const History& h, LockId lock) {
  Analysis a(h, lock);
  std::vector<CsInterval> cs = cs_intervals(h, {lock});
  ResponsivenessVerdict v;
  for (const Event& e : h.events) {
    Seq t = e.seq;
    std::uint32_t in_cs = 0;
    for (const CsInterval& c : cs)
      if (c.begin <= t && c.end >= t) in_cs++;
    std::uint32_t active = 0;
    for (const FailureRecord& f : a.failures()) {
      bool unsafe_here = std::find(f.unsafe_for.begin(), f.unsafe_for.end(), lock) !=
                         f.unsafe_for.end();
      if (unsafe_here && f.seq <= t && f.ci_end >= t) active++;
    }
    if (in_cs > 1 + active) {
      v.ok = false;
      if (v.first_violation == kNoSeq) v.first_violation = t;
      v.worst_excess = std::max(v.worst_excess, in_cs - 1 - active);
    }
  }
  return v;
}

// -- step bounds --------------------------------------------------------------

StepBoundVerdict check_step_bounds(const History& h, LockId lock, const StepBounds& b) {
  StepBoundVerdict v;
  struct State {
    bool in_recover = false, in_exit = false, in_enter = false;
    bool bcsr_pending = false;  // crashed inside CS, not yet re-entered
    std::uint32_t count = 0;
  };
  std::vector<State> st(h.n + 1);
  std::vector<bool> in_cs(h.n + 1, false);
  for (const Event& e : h.events) {
    State& s = st[e.pid];
    if (e.kind == Ev::Crash) {
      if (in_cs[e.pid]) s.bcsr_pending = true;
      s.in_recover = s.in_exit = s.in_enter = false;
      in_cs[e.pid] = false;
      s.count = 0;
      continue;
    }
    if (e.is_instr()) {
      if (s.in_recover || s.in_exit || (s.in_enter && s.bcsr_pending)) s.count++;
      continue;
    }
    if (e.kind != Ev::Marker || e.lock != lock) continue;
    switch (e.marker) {
      case Mk::RecoverBegin:
        s.in_recover = true;
        s.count = 0;
        break;
      case Mk::RecoverEnd:
        if (s.in_recover) {
          v.max_recover = std::max(v.max_recover, s.count);
          if (s.count > b.recover) {
            v.ok = false;
            v.detail += "recover bound exceeded; ";
          }
        }
        s.in_recover = false;
        s.count = 0;
        break;
      case Mk::EnterBegin:
        s.in_enter = true;
        s.count = 0;
        break;
      case Mk::CsBegin:
        if (s.in_enter && s.bcsr_pending) {
          v.max_reenter = std::max(v.max_reenter, s.count);
          if (s.count > b.reenter) {
            v.ok = false;
            v.detail += "reentry bound exceeded; ";
          }
          s.bcsr_pending = false;
        }
        s.in_enter = false;
        in_cs[e.pid] = true;
        s.count = 0;
        break;
      case Mk::CsEnd:
        in_cs[e.pid] = false;
        break;
      case Mk::ExitBegin:
        s.in_exit = true;
        s.count = 0;
        break;
      case Mk::ExitEnd:
        if (s.in_exit) {
          v.max_exit = std::max(v.max_exit, s.count);
          if (s.count > b.exit) {
            v.ok = false;
            v.detail += "exit bound exceeded; ";
          }
        }
        s.in_exit = false;
        s.count = 0;
        break;
      default:
        break;
    }
  }
  return v;
}

// -- fairness -----------------------------------------------------------------

FairnessReport check_fairness(const History& h, LockId lock) {
  Analysis a(h, lock);
  FairnessReport rep;
  const auto& ps = a.passages();
  const auto& kfc = a.k_fc_levels();

  auto exclusive = [&](std::size_t i) {
    const Passage& p = ps[i];
    if (!(p.complete && p.failure_free)) return false;
    for (const SuperPassage& sp : a.superpassages())
      for (std::size_t j : sp.passages)
        if (j == i) return sp.failure_free;
    return false;
  };
  auto overlaps_any_ci = [&](const Passage& p) {
    for (const FailureRecord& f : a.failures())
      if (f.seq <= p.end && f.ci_end >= p.start) return true;
    return false;
  };
  auto conclusion_violated = [&](const Passage& r, const Passage& s) {
    // once q starts the CS of s, p must have started the Exit of r
    if (s.cs_begin == kNoSeq) return false;
    return r.exit_begin == kNoSeq || r.exit_begin > s.cs_begin;
  };

  for (std::size_t i = 0; i < ps.size(); ++i)
    if (exclusive(i)) rep.exclusive_passages++;

  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (std::size_t j = 0; j < ps.size(); ++j) {
      if (i == j) continue;
      const Passage& r = ps[i];
      const Passage& s = ps[j];
      if (r.pid == s.pid) continue;
      if (r.doorway_end == kNoSeq || s.enter_begin == kNoSeq) continue;
      if (r.doorway_end >= s.enter_begin) continue;

      if (exclusive(i) && exclusive(j) && !overlaps_any_ci(r) && conclusion_violated(r, s))
        rep.ci_fcfs_violations.emplace_back(r.start, s.start);
      if (kfc[i] > 1 && kfc[j] > 1 && conclusion_violated(r, s))
        rep.fcfs1_violations.emplace_back(r.start, s.start);
      if (kfc[i] > 2 && kfc[j] > 2 && conclusion_violated(r, s))
        rep.fcfs2_violations.emplace_back(r.start, s.start);
    }
  }
  return rep;
}

// -- metrics ------------------------------------------------------------------

std::vector<MetricsRow> metrics(const History& h, LockId lock) {
  Analysis a(h, lock);
  std::vector<MetricsRow> rows;

  // deepest level entered per super-passage, from EnterBegin markers of
  // level-tagged component locks
  std::unordered_map<LockId, std::uint32_t> level_of;
  for (const LockInfo& li : h.locks)
    if (li.level > 0) level_of[li.id] = li.level;

  for (const SuperPassage& sp : a.superpassages()) {
    std::uint32_t deepest = 0;
    for (const Event& e : h.events) {
      if (e.kind != Ev::Marker || e.marker != Mk::EnterBegin) continue;
      if (e.pid != sp.pid || e.seq < sp.start || e.seq > sp.end) continue;
      auto it = level_of.find(e.lock);
      if (it != level_of.end()) deepest = std::max(deepest, it->second);
    }
    std::uint64_t f = a.failure_density(sp);
    std::uint64_t pc = a.point_contention(sp);
    std::uint32_t idx = 0;
    for (std::size_t pi : sp.passages) {
      const Passage& p = a.passages()[pi];
      MetricsRow row;
      row.pid = sp.pid;
      row.sp = p.sp;
      row.passage = idx++;
      row.failure_free = p.complete && p.failure_free;
      row.deepest_level = deepest;
      row.rmr = p.rmr;
      row.failure_density = f;
      row.point_contention = pc;
      rows.push_back(row);
    }
  }
  return rows;
}

// -- sub-queue reconstruction ---------------------------------------------------

SubQueueVerdict check_subqueue_bound(const History& h, LockId wrlock) {
  SubQueueVerdict v;
  const LockInfo* li = nullptr;
  for (const LockInfo& l : h.locks)
    if (l.id == wrlock) li = &l;
  if (!li) throw MalformedHistory("unknown lock for subqueue check");

  // word roles
  std::unordered_map<WordId, Word> next_word_of;    // next-word id -> node ref
  std::unordered_map<WordId, Word> locked_word_of;  // locked-word id -> node ref
  std::unordered_map<Word, Pid> owner_of;
  for (const NodeInfo& ni : h.nodes) {
    next_word_of[ni.next_word] = ni.ref;
    locked_word_of[ni.locked_word] = ni.ref;
    owner_of[ni.ref] = ni.owner;
  }
  WordId tail = li->tail_word;
  std::unordered_map<WordId, Pid> pred_word_pid;
  for (Pid p = 1; p <= h.n; ++p)
    if (p < li->pred_words.size() + 1 && !li->pred_words.empty())
      pred_word_pid[li->pred_words[p - 1]] = p;

  struct Inst {
    Word ref = 0;
    Pid owner = 0;
    Word pred = 0;  // node ref or kNil
    bool persisted = false;
    bool disrupted = false;
    bool relieved = false;
  };
  std::vector<Inst> insts;
  std::unordered_map<Word, std::size_t> by_ref;          // ref -> instance
  std::vector<std::size_t> open_of_pid(h.n + 1, SIZE_MAX);  // appended, unrelieved

  std::uint32_t unsafe_so_far = 0;

  auto fronts = [&]() {
    std::uint32_t c = 0;
    for (const Inst& x : insts) {
      if (x.relieved) continue;
      bool edge = false;
      if (x.pred != kNil && !x.disrupted && x.persisted) {
        auto it = by_ref.find(x.pred);
        if (it != by_ref.end() && !insts[it->second].relieved) edge = true;
      }
      // an appended, not-yet-persisted, not-yet-crashed node also has an
      // admissible edge to its predecessor
      if (x.pred != kNil && !x.disrupted && !x.persisted) {
        auto it = by_ref.find(x.pred);
        if (it != by_ref.end() && !insts[it->second].relieved) edge = true;
      }
      if (!edge) c++;
    }
    return c;
  };

  for (const Event& e : h.events) {
    if (e.kind == Ev::Crash) {
      bool unsafe_here =
          std::find(e.unsafe_for.begin(), e.unsafe_for.end(), wrlock) != e.unsafe_for.end();
      if (unsafe_here) unsafe_so_far++;
      std::size_t oi = open_of_pid[e.pid];
      if (oi != SIZE_MAX && !insts[oi].persisted) insts[oi].disrupted = true;
      continue;
    }
    if (e.kind == Ev::Fas && e.word == tail) {
      Inst x;
      x.ref = e.arg;
      x.owner = e.pid;
      x.pred = e.val == kNil ? kNil : e.val;
      insts.push_back(x);
      by_ref[x.ref] = insts.size() - 1;
      open_of_pid[e.pid] = insts.size() - 1;
    } else if (e.kind == Ev::Write && pred_word_pid.count(e.word)) {
      if (e.val != kUnset) {
        std::size_t oi = open_of_pid[e.pid];
        if (oi != SIZE_MAX) insts[oi].persisted = true;
      }
    } else if (e.kind == Ev::Cas && e.ok && e.arg == kNil && next_word_of.count(e.word)) {
      Word node = next_word_of[e.word];
      auto it = by_ref.find(node);
      if (it != by_ref.end() && insts[it->second].owner == e.pid) {
        // owner CAS of its own next field: the relieve-with-no-successor path
        insts[it->second].relieved = true;
        if (open_of_pid[e.pid] == it->second) open_of_pid[e.pid] = SIZE_MAX;
      }
    } else if (e.kind == Ev::Write && e.val == 0 && locked_word_of.count(e.word)) {
      // clearing a successor's spin flag relieves the writer's own node
      std::size_t oi = open_of_pid[e.pid];
      if (oi != SIZE_MAX) {
        insts[oi].relieved = true;
        open_of_pid[e.pid] = SIZE_MAX;
      }
    }

    std::uint32_t f = fronts();
    v.max_subqueues = std::max(v.max_subqueues, f);
    if (f > 0 && f - 1 > unsafe_so_far) {
      v.ok = false;
      if (v.first_violation == kNoSeq) v.first_violation = e.seq;
    }
  }
  return v;
}

// -- verdict serialization -----------------------------------------------------

std::string verdict_json(const History& h, LockId lock, const StepBounds& bounds) {
  json out;
  out["lock"] = lock;
  auto me = check_me(h, lock);
  out["me_violations"] = me.size();
  auto resp = check_responsiveness(h, lock);
  out["responsive"] = resp.ok;
  auto sb = check_step_bounds(h, lock, bounds);
  out["step_bounds_ok"] = sb.ok;
  out["max_recover_steps"] = sb.max_recover;
  out["max_exit_steps"] = sb.max_exit;
  out["max_reenter_steps"] = sb.max_reenter;
  auto fair = check_fairness(h, lock);
  out["ci_fcfs_violations"] = fair.ci_fcfs_violations.size();
  out["fcfs1_violations"] = fair.fcfs1_violations.size();
  Analysis a(h, lock);
  out["passages"] = a.passages().size();
  out["superpassages"] = a.superpassages().size();
  std::uint64_t incomplete = 0;
  for (const SuperPassage& sp : a.superpassages())
    if (!sp.complete) incomplete++;
  out["incomplete_superpassages"] = incomplete;  // starvation is reported, not asserted
  out["failures"] = a.failures().size();
  return out.dump();
}

}  // namespace rme
