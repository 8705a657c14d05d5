#pragma once

#include <cstdint>
#include <random>

namespace tsattr {

// Portable seeded generator.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The distributions below are implemented here rather than taken
// from <random>, because the standard leaves those algorithms to the library
// vendor and their output differs between libstdc++, libc++ and MSVC.
//
//   uniform()      53 high bits of one engine draw, scaled to [0, 1)
//   uniform_int()  rejection sampling on the raw 64-bit draw
//   normal()       Box-Muller; both variates of a pair are used in order
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer on the closed interval [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Mixes a base seed with a tag into an independent stream seed (splitmix64
// finalizer), used where offsets alone could collide.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t tag);

}  // namespace tsattr
