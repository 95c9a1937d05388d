#ifndef RME_EVENT_HPP
#define RME_EVENT_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rme/types.hpp"

namespace rme {

enum class Ev : std::uint8_t { Read, Write, Cas, Fas, Local, Crash, Restart, Marker };

enum class Mk : std::uint8_t {
  NcsBegin,
  RecoverBegin,
  RecoverEnd,
  EnterBegin,
  DoorwayEnd,
  CsBegin,
  CsEnd,
  ExitBegin,
  ExitEnd,
};

const char* ev_name(Ev e);
const char* mk_name(Mk m);

struct Event {
  Seq seq = 0;
  Pid pid = 0;
  Ev kind = Ev::Local;
  WordId word = 0;      // instruction events only
  Word arg = 0;         // write/fas: value stored; cas: expected value
  Word val = 0;         // read/fas/cas: value observed; write: value stored
  bool ok = true;       // cas success
  bool rmr = false;
  Mk marker = Mk::NcsBegin;            // marker events only
  LockId lock = 0;                     // marker events only
  std::vector<LockId> unsafe_for;      // crash events: locks whose sensitive window was open

  bool is_instr() const {
    return kind == Ev::Read || kind == Ev::Write || kind == Ev::Cas || kind == Ev::Fas ||
           kind == Ev::Local;
  }
};

struct LockInfo {
  LockId id = 0;
  std::string name;
  std::string kind;   // wrlock | arbitrator_port | splitter | semi | super | tournament | broadcast
  std::uint32_t level = 0;  // recursive-lock level; 0 when not applicable
  // wrlock instances record their word layout so the checker can rebuild the
  // queue structure offline
  WordId tail_word = 0;
  std::vector<WordId> pred_words;  // index pid-1
};

// Node table entry, serialized with the history so the checker can rebuild
// the queue structure offline.
struct NodeInfo {
  Word ref = 0;
  WordId locked_word = 0;
  WordId next_word = 0;
  Pid owner = 0;
};

struct History {
  std::uint32_t n = 0;
  std::string model;       // "cc" | "dsm"
  bool strong_cc = true;
  std::uint64_t seed = 0;
  std::vector<LockInfo> locks;
  std::vector<NodeInfo> nodes;
  std::vector<Event> events;

  const LockInfo* lock_by_name(const std::string& name) const;
  std::vector<LockId> locks_of_kind(const std::string& kind) const;
};

// Line-delimited JSON: one meta line, one line per event, one node-table line.
void write_history(const History& h, std::ostream& os);
History read_history(std::istream& is);
std::string history_to_string(const History& h);
History history_from_string(const std::string& text);

}  // namespace rme

#endif
