#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace regvar {

/// Counter-keyed generator: the stream for (seed, stream, index) is fixed, so
/// sample i can be drawn on any worker and still be reproducible.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index)
      : state_(mix(mix(seed ^ 0x9e3779b97f4a7c15ULL) ^ mix(stream + 0x632be59bd9b4e019ULL) ^
                   (index * 0xbf58476d1ce4e5b9ULL))) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    // Box-Muller; 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform direction on the unit sphere of dimension out.size().
  void direction(std::span<double> out) {
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (double& v : out) {
        v = normal();
        norm2 += v * v;
      }
    } while (norm2 < 1e-300);
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& v : out) v *= inv;
  }

  /// Uniform point in the open ball of the given radius around the origin.
  void in_ball(std::span<double> out, double radius) {
    direction(out);
    const double s = radius * std::pow(uniform(), 1.0 / static_cast<double>(out.size()));
    for (double& v : out) v *= s;
  }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

}  // namespace regvar
