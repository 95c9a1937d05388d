#ifndef RME_CHECKER_HPP
#define RME_CHECKER_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rme/event.hpp"
#include "rme/lock.hpp"

namespace rme {

inline constexpr Seq kNoSeq = ~Seq(0);

// One passage of a process with respect to one lock: Recover-begin through
// Exit-end, or the crash that cut it short.
struct Passage {
  Pid pid = 0;
  LockId lock = 0;
  Seq start = 0;              // RecoverBegin
  Seq end = 0;                // ExitEnd seq, crash seq, or last seq of history
  bool complete = false;      // reached ExitEnd
  bool crash_ended = false;
  bool failure_free = false;  // complete with no crash inside
  Seq enter_begin = kNoSeq;
  Seq doorway_end = kNoSeq;
  Seq cs_begin = kNoSeq;
  Seq cs_end = kNoSeq;        // CsEnd or crash while in CS
  Seq exit_begin = kNoSeq;
  bool crashed_in_cs = false;
  std::uint64_t rmr = 0;      // rmr-charged events of pid within [start,end]
  std::uint32_t sp = 0;       // super-passage ordinal (filled by grouping)
};

struct SuperPassage {
  Pid pid = 0;
  LockId lock = 0;
  std::vector<std::size_t> passages;  // indices into the passage list
  Seq start = 0;
  Seq end = 0;       // completion seq, or last seq of history when incomplete
  bool complete = false;
  bool failure_free = false;  // exactly one passage, failure-free
};

struct FailureRecord {
  Seq seq = 0;
  Pid pid = 0;
  std::vector<LockId> unsafe_for;
  Seq ci_end = 0;  // consequence interval [seq, ci_end], lock-relative
};

struct MeViolation {
  Seq at = 0;
  Pid a = 0, b = 0;
};

struct FairnessReport {
  std::uint64_t exclusive_passages = 0;
  std::vector<std::pair<Seq, Seq>> ci_fcfs_violations;   // (r.start, s.start)
  std::vector<std::pair<Seq, Seq>> fcfs1_violations;
  std::vector<std::pair<Seq, Seq>> fcfs2_violations;
};

struct MetricsRow {
  Pid pid = 0;
  std::uint32_t sp = 0;
  std::uint32_t passage = 0;
  bool failure_free = false;
  std::uint32_t deepest_level = 0;
  std::uint64_t rmr = 0;
  std::uint64_t failure_density = 0;
  std::uint64_t point_contention = 0;
};

// All lock-relative derivations for one history, computed once.
class Analysis {
 public:
  Analysis(const History& h, LockId lock);

  const std::vector<Passage>& passages() const { return passages_; }
  const std::vector<SuperPassage>& superpassages() const { return sps_; }
  const std::vector<FailureRecord>& failures() const { return failures_; }

  std::uint64_t failure_density(const SuperPassage& sp) const;
  std::uint64_t point_contention(const SuperPassage& sp) const;

  // 0-based minimal k for which each passage is k-failure-concurrent
  // (kNoK when not k-FC for any k).
  static constexpr std::uint32_t kNoK = ~std::uint32_t(0);
  const std::vector<std::uint32_t>& k_fc_levels() const { return kfc_; }
  bool ci_concurrent(std::size_t passage_index) const;

 private:
  void build_passages(const History& h);
  void build_superpassages();
  void build_failures(const History& h);
  void build_kfc();

  const History& h_;
  LockId lock_;
  Seq last_seq_ = 0;
  std::vector<Passage> passages_;
  std::vector<SuperPassage> sps_;
  std::vector<FailureRecord> failures_;
  std::vector<std::uint32_t> kfc_;
};

std::vector<Passage> classify_passages(const History& h, LockId lock);
std::vector<SuperPassage> classify_superpassages(const History& h, LockId lock);
std::vector<FailureRecord> unsafe_failures(const History& h, LockId lock);

std::vector<MeViolation> check_me(const History& h, LockId lock);
// merged CS occupancy over several pseudo-locks (both arbitrator ports)
std::vector<MeViolation> check_me_joint(const History& h, const std::vector<LockId>& locks);

struct ResponsivenessVerdict {
  bool ok = true;
  Seq first_violation = kNoSeq;
  std::uint32_t worst_excess = 0;  // max over points of in_cs - (1 + active unsafe CIs)
};
ResponsivenessVerdict check_responsiveness(const History& h, LockId lock);

struct StepBoundVerdict {
  bool ok = true;
  std::uint32_t max_recover = 0;
  std::uint32_t max_exit = 0;
  std::uint32_t max_reenter = 0;
  std::string detail;
};
StepBoundVerdict check_step_bounds(const History& h, LockId lock, const StepBounds& b);

FairnessReport check_fairness(const History& h, LockId lock);

std::vector<MetricsRow> metrics(const History& h, LockId lock);

// sub-queue structure reconstruction for the WR-Lock edge-disruption bound:
// at every history point, #sub-queues - 1 <= #unsafe failures so far
struct SubQueueVerdict {
  bool ok = true;
  std::uint32_t max_subqueues = 0;
  Seq first_violation = kNoSeq;
};
SubQueueVerdict check_subqueue_bound(const History& h, LockId wrlock);

std::string verdict_json(const History& h, LockId lock, const StepBounds& bounds);

}  // namespace rme

#endif
