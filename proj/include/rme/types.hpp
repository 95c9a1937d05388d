#ifndef RME_TYPES_HPP
#define RME_TYPES_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rme {

using Word = std::uint64_t;
using WordId = std::uint32_t;
using Pid = std::uint32_t;     // process indices run 1..n
using LockId = std::uint32_t;
using Seq = std::uint64_t;

// Reserved word values. Node references live in the tagged range below and
// can never collide with these.
inline constexpr Word kNil = 0;
inline constexpr Word kLocked = ~Word(0) - 1;   // "relieved, no successor" sentinel
inline constexpr Word kUnset = ~Word(0) - 2;    // pred[i] before the persist step

// Node references: bit 63 tags the value as a node id; generation guards
// against use of a reclaimed slot.
inline constexpr Word kNodeTag = Word(1) << 63;

inline constexpr Word make_node_ref(std::uint32_t index, std::uint32_t gen) {
  return kNodeTag | (Word(gen) << 32) | Word(index);
}
inline constexpr bool is_node_ref(Word w) { return (w & kNodeTag) != 0 && w < kLocked; }
inline constexpr std::uint32_t node_index(Word w) { return static_cast<std::uint32_t>(w & 0xffffffffu); }
inline constexpr std::uint32_t node_gen(Word w) { return static_cast<std::uint32_t>((w >> 32) & 0x7fffffffu); }

struct SimFault : std::runtime_error {
  explicit SimFault(const std::string& what) : std::runtime_error(what) {}
};
struct PoisonAccess : SimFault { using SimFault::SimFault; };
struct UnknownWord : SimFault { using SimFault::SimFault; };
struct DoubleCrash : SimFault { using SimFault::SimFault; };
struct RestartWithoutCrash : SimFault { using SimFault::SimFault; };
struct PoolExhausted : SimFault { using SimFault::SimFault; };
struct MalformedHistory : SimFault { using SimFault::SimFault; };

// splitmix64: deterministic across platforms, good enough for scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  // unbiased-enough for small bounds
  std::uint64_t below(std::uint64_t bound) { return bound ? next() % bound : 0; }
  bool chance(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return (next() >> 11) * 0x1.0p-53 < p;
  }

 private:
  std::uint64_t state_;
};

// Byte buffer used for exact state snapshots and canonical hashing.
struct Buf {
  std::string bytes;
  void u8(std::uint8_t v) { bytes.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
};

struct BufReader {
  const std::string& bytes;
  std::size_t pos = 0;
  std::uint8_t u8() { return static_cast<std::uint8_t>(bytes.at(pos++)); }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(u8()) << (8 * i);
    return v;
  }
};

}  // namespace rme

#endif
