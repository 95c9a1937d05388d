#include "rme/memory.hpp"

namespace rme {

WordId Memory::alloc(Pid home, Word init) {
  if (home < 1 || home > n_) throw SimFault("alloc_word: home out of range");
  cells_.push_back(Cell{init, home, 0u, false});
  return static_cast<WordId>(cells_.size() - 1);
}

AccessResult Memory::access(Pid pid, Op op, WordId w, Word a, Word b) {
  Cell& c = cell_mut(w);
  if (c.freed) throw PoisonAccess("access to freed word " + std::to_string(w));
  AccessResult r;
  const std::uint32_t bit = 1u << (pid - 1);

  switch (op) {
    case Op::Read:
      r.value = c.value;
      break;
    case Op::Write:
      c.value = a;
      r.value = a;
      break;
    case Op::Cas:
      r.value = c.value;
      r.ok = (c.value == a);
      if (r.ok) c.value = b;
      break;
    case Op::Fas:
      r.value = c.value;
      c.value = a;
      break;
  }

  if (model_.kind == MemModel::DSM) {
    r.rmr = (c.home != pid);
    return r;
  }

  // CC accounting: reads hit the cache when present; every write/RMW counts
  // as a coherence action (including invalidation of other copies).
  switch (op) {
    case Op::Read:
      if (c.cached_by & bit) {
        r.rmr = false;
      } else {
        r.rmr = true;
        c.cached_by |= bit;
      }
      break;
    case Op::Write:
    case Op::Fas:
      r.rmr = true;
      c.cached_by = bit;
      break;
    case Op::Cas:
      r.rmr = true;
      if (r.ok || model_.failed_cas_invalidates) c.cached_by = bit;
      break;
  }
  return r;
}

void Memory::drop_cached(Pid pid) {
  if (model_.kind != MemModel::CC) return;
  const std::uint32_t bit = 1u << (pid - 1);
  for (Cell& c : cells_) c.cached_by &= ~bit;
}

void Memory::save(Buf& out) const {
  out.u32(static_cast<std::uint32_t>(cells_.size()));
  for (const Cell& c : cells_) {
    out.u64(c.value);
    out.u32(c.home);
    out.u32(c.cached_by);
    out.u8(c.freed ? 1 : 0);
  }
}

void Memory::load(BufReader& in) {
  std::uint32_t count = in.u32();
  cells_.resize(count);
  for (Cell& c : cells_) {
    c.value = in.u64();
    c.home = in.u32();
    c.cached_by = in.u32();
    c.freed = in.u8() != 0;
  }
}

}  // namespace rme
