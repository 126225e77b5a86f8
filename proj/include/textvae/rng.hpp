#pragma once

#include <array>
#include <cstdint>

namespace textvae {

// xoshiro256** with splitmix64 seeding. Distributions are implemented here
// rather than taken from <random> so that streams are bit-reproducible across
// standard libraries and serializable into checkpoints.
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform on [0, 1).
  double uniform();
  // Uniform on [lo, hi).
  double uniform(double lo, double hi);
  // Uniform integer in [0, n). n must be positive.
  int uniform_int(int n);
  // Standard normal via Box-Muller (one draw per call, no cached spare).
  double normal();

  // Derived independent stream; deterministic in (current state, tag) but
  // does not advance this generator.
  Rng fork(std::uint64_t tag) const;

  std::array<std::uint64_t, 4> state() const { return s_; }
  void set_state(const std::array<std::uint64_t, 4>& s) { s_ = s; }

 private:
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace textvae
