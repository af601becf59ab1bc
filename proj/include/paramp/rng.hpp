#pragma once

#include <cmath>
#include <cstdint>

namespace paramp {

// Counter-seeded xoshiro256++ with a Box-Muller Gaussian layer.  We roll our
// own generator for two reasons: per-trajectory streams must be derivable
// from (seed, trajectory index) so results do not depend on how trajectories
// are scheduled across threads, and std::normal_distribution is
// implementation-defined, which would break bit-exact replays across
// standard libraries.

/// SplitMix64 step, used to expand a (seed, stream) pair into generator state.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

class Xoshiro256pp {
 public:
  Xoshiro256pp(std::uint64_t seed, std::uint64_t stream) {
    // Hash the pair through SplitMix64 so that neighboring (seed, stream)
    // values yield unrelated states; all-zero state is unreachable.
    std::uint64_t sm = seed ^ (stream * 0x9e3779b97f4a7c15ull + 0x123456789abcdefull);
    for (auto& word : state_) word = splitmix64(sm);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in (0, 1]; never returns 0, so log() below is safe.
  double uniform() {
    return static_cast<double>((next() >> 11) + 1) * 0x1p-53;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4];
};

/// Standard normal variates via Box-Muller on top of Xoshiro256pp.
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint64_t stream) : rng_(seed, stream) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = rng_.uniform();
    const double u2 = rng_.uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  Xoshiro256pp rng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace paramp
