#pragma once

#include <cstdint>
#include <random>

namespace m2dqn {

using Rng = std::mt19937_64;

/// Independent random substreams derived from one run seed. Each stream gets
/// its own generator so that, for example, switching the learning algorithm
/// does not perturb the environment's reset sequence.
enum class Stream : std::uint64_t {
  kEnvironment = 1,
  kInit = 2,
  kReplay = 3,
  kExploration = 4,
  kEvaluation = 5,
};

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for substream `stream` of run seed `seed`:
/// splitmix64(splitmix64(seed) ^ stream_id).
constexpr std::uint64_t substream_seed(std::uint64_t seed, Stream stream) {
  return splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(stream));
}

inline Rng make_rng(std::uint64_t seed, Stream stream) {
  return Rng(substream_seed(seed, stream));
}

/// Uniform double in [0, 1) from the top 53 bits of one generator draw.
/// Used instead of std::uniform_real_distribution so that sequences do not
/// depend on the standard library implementation.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Uniform integer in [0, n) by rejection sampling (no modulo bias).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = Rng::max() - Rng::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

}  // namespace m2dqn
