#ifndef FACEATTR_RNG_HPP
#define FACEATTR_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

namespace faceattr {

/// Counter-based deterministic random stream.
///
/// Draw i of a stream is a pure function of (seed, i), so identical seeds
/// reproduce identical sequences on every platform. Each normal() consumes
/// exactly two counter positions (Box-Muller, no rejection), which keeps
/// stream positions stable.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = seed_ + kGamma * ++counter_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1p-53; }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_below(std::uint64_t n) { return next_u64() % n; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal(double mean, double stddev) {
    // u1 in (0, 1] so the log is finite.
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1p-53;
    double u2 = uniform();
    double z = std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    return mean + stddev * z;
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t position() const { return counter_; }

  /// Mixes substream labels into a fresh seed, e.g. (seed, epoch, index).
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b = 0) {
    std::uint64_t z = seed;
    z = mix(z + kGamma + a);
    z = mix(z + kGamma + b);
    return z;
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 33)) * 0xFF51AFD7ED558CCDull;
    z = (z ^ (z >> 33)) * 0xC4CEB9FE1A85EC53ull;
    return z ^ (z >> 33);
  }

  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace faceattr

#endif
