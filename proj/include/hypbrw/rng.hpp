#pragma once

// Counter-based random streams.  A stream is addressed by a key such as
// (seed, replica, generation, particle) and is a pure function of that key,
// so results do not depend on how work is split across threads.

#include <cstdint>
#include <initializer_list>

namespace hypbrw {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class CounterRng {
 public:
  CounterRng(std::initializer_list<std::uint64_t> key) {
    std::uint64_t h = 0x6a09e667f3bcc909ULL;
    for (std::uint64_t k : key) h = mix64(h ^ mix64(k + 0x9e3779b97f4a7c15ULL));
    state_ = h;
  }

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace hypbrw
