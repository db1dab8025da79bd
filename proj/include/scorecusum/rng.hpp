#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace scusum {

using Engine = std::mt19937_64;

/// Mixes a master seed with a list of integer tags into an independent seed.
/// Streams keyed by distinct tag lists are statistically unrelated.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  std::uint64_t h = mix(master);
  for (auto t : tags) h = mix(h ^ mix(t + 0x632be59bd9b4e019ULL));
  return h;
}

inline Engine make_engine(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
  return Engine(derive_seed(master, tags));
}

/// Uniform draw on [0,1) with 53 random bits; independent of the standard
/// library's distribution implementation so streams replay across toolchains.
inline double uniform01(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline double uniform(Engine& eng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(eng);
}

inline int bernoulli(Engine& eng, double p) { return uniform01(eng) < p ? 1 : 0; }

// Stream tags used by the simulator and the bootstrap.
namespace stream {
inline constexpr std::uint64_t kCovariates = 1;
inline constexpr std::uint64_t kTreatment = 2;
inline constexpr std::uint64_t kOutcome = 3;
inline constexpr std::uint64_t kSplit = 4;
inline constexpr std::uint64_t kPretrain = 5;
inline constexpr std::uint64_t kBootstrap = 6;
inline constexpr std::uint64_t kReplicate = 7;
inline constexpr std::uint64_t kNaiveBootstrap = 8;
inline constexpr std::uint64_t kProjection = 9;
}  // namespace stream

}  // namespace scusum
