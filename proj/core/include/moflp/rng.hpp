#ifndef MOFLP_RNG_HPP
#define MOFLP_RNG_HPP

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace moflp {

/// SplitMix64 mixing step.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives a child seed from a base seed and a path of stream identifiers.
/// Equal (base, path) pairs give equal seeds; distinct paths give independent
/// streams, so work fanned out per index stays reproducible under any worker
/// count.
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(base ^ 0x6a09e667f3bcc909ULL);
  for (std::uint64_t p : path) {
    s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  }
  return s;
}

/// Well-known top-level stream ids so independent pipeline stages never share
/// a raw seed.
namespace seed_stream {
inline constexpr std::uint64_t gen = 0x11;
inline constexpr std::uint64_t solve = 0x22;
inline constexpr std::uint64_t dataset = 0x33;
inline constexpr std::uint64_t train = 0x44;
inline constexpr std::uint64_t sample = 0x55;
inline constexpr std::uint64_t compare = 0x66;
inline constexpr std::uint64_t random_baseline = 0x77;
inline constexpr std::uint64_t sweep = 0x88;
}  // namespace seed_stream

/// Deterministic random stream. Doubles are built directly from the raw
/// 64-bit output, so draws do not depend on library distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform index in [0, n); n must be positive.
  std::size_t index(std::size_t n) {
    auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace moflp

#endif  // MOFLP_RNG_HPP
