#pragma once

#include <cstdint>
#include <random>

namespace miracle {

// Stream purposes. Each consumer derives its own generator from
// (seed, purpose, epoch), so toggling one stochastic feature never
// reshuffles the draws of another, and resuming from a checkpoint at an
// epoch boundary replays the exact same streams.
enum class RngStream : std::uint64_t {
  kInit = 1,
  kSplit = 2,
  kNegatives = 3,
  kDropout = 4,
  kPairs = 5,
  kUnlabeled = 6,
  kFuzz = 7,
};

namespace detail {
// splitmix64 finalizer; decorrelates the (seed, purpose, epoch) triple.
inline std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

inline std::uint64_t derive_seed(std::uint64_t seed, RngStream stream,
                                 std::uint64_t epoch = 0) {
  std::uint64_t h = detail::mix(seed);
  h = detail::mix(h ^ static_cast<std::uint64_t>(stream));
  h = detail::mix(h ^ epoch);
  return h;
}

inline std::mt19937_64 make_rng(std::uint64_t seed, RngStream stream,
                                std::uint64_t epoch = 0) {
  return std::mt19937_64(derive_seed(seed, stream, epoch));
}

}  // namespace miracle
