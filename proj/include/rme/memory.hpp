#ifndef RME_MEMORY_HPP
#define RME_MEMORY_HPP

#include <vector>

#include "rme/types.hpp"

namespace rme {

enum class MemModel : std::uint8_t { CC, DSM };

struct RmrModel {
  MemModel kind = MemModel::DSM;
  bool failed_cas_invalidates = true;  // strong-CC flag; no effect under DSM
};

enum class Op : std::uint8_t { Read, Write, Cas, Fas };

struct AccessResult {
  Word value = 0;   // read/fas: prior value; cas: prior value; write: stored value
  bool ok = true;   // cas success flag
  bool rmr = false;
};

// Word-granular shared memory. Values survive crashes; the CC cached_by sets
// model per-process cache copies and are cleared for a process when it
// crashes (cache contents are volatile).
class Memory {
 public:
  explicit Memory(std::uint32_t nprocs, RmrModel model) : n_(nprocs), model_(model) {}

  WordId alloc(Pid home, Word init);

  AccessResult access(Pid pid, Op op, WordId w, Word a = 0, Word b = 0);

  Word peek(WordId w) const { return cell(w).value; }
  void set_freed(WordId w, bool freed) { cell_mut(w).freed = freed; }
  bool freed(WordId w) const { return cell(w).freed; }
  Pid home(WordId w) const { return cell(w).home; }
  std::uint32_t cached_mask(WordId w) const { return cell(w).cached_by; }

  std::uint32_t size() const { return static_cast<std::uint32_t>(cells_.size()); }
  std::uint32_t nprocs() const { return n_; }
  const RmrModel& model() const { return model_; }

  void drop_cached(Pid pid);  // on crash: p loses its cache copies
  void truncate(std::uint32_t count) { cells_.resize(count); }

  void save(Buf& out) const;
  void load(BufReader& in);

 private:
  struct Cell {
    Word value;
    Pid home;
    std::uint32_t cached_by;  // bitmask over pids 1..n (bit i-1)
    bool freed;
  };
  const Cell& cell(WordId w) const {
    if (w >= cells_.size()) throw UnknownWord("unknown word " + std::to_string(w));
    return cells_[w];
  }
  Cell& cell_mut(WordId w) {
    if (w >= cells_.size()) throw UnknownWord("unknown word " + std::to_string(w));
    return cells_[w];
  }

  std::uint32_t n_;
  RmrModel model_;
  std::vector<Cell> cells_;
};

}  // namespace rme

#endif
