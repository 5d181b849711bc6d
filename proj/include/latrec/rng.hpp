// Apache License, Version 2.0, refer to LICENSE.txt.
//
// Counter-keyed random streams. Every sampling site derives its own
// stream from a root seed plus integer coordinates (phase, iteration,
// sweep, block, unit). Draws therefore depend only on those
// coordinates, never on thread scheduling or visit order, which makes
// parallel sampling bit-reproducible.

#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace latrec {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace detail

// Mixes a seed and a list of coordinates into a stream key. Distinct
// coordinate tuples give (for all practical purposes) independent
// streams.
inline std::uint64_t derive_stream(std::uint64_t seed,
                                   std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = seed ^ 0x8000000080003151ull;
  detail::splitmix64(h);
  for (std::uint64_t p : parts) {
    h ^= p + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h = detail::splitmix64(h);
  }
  return h;
}

// SplitMix64 stream with uniform and Gaussian draws. Satisfies
// UniformRandomBitGenerator but the distributions below are hand
// rolled so output is identical across standard libraries.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  explicit StreamRng(std::uint64_t key) : state_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~0ull; }
  result_type operator()() { return detail::splitmix64(state_); }

  // Uniform on (0, 1), never exactly 0 or 1.
  double uniform() {
    const std::uint64_t bits = (*this)() >> 11;  // 53 bits
    return (static_cast<double>(bits) + 0.5) * 0x1p-53;
  }

  // Uniform integer in [0, n), n >= 1. Lemire multiply-shift; the
  // tiny modulo bias is irrelevant at the sizes used here and the
  // draw count per call is fixed, which keeps streams aligned.
  std::uint64_t uniform_index(std::uint64_t n) {
    const unsigned __int128 wide =
        static_cast<unsigned __int128>((*this)()) * n;
    return static_cast<std::uint64_t>(wide >> 64);
  }

  // Standard normal via Box-Muller (cosine branch only, stateless).
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::uint64_t state_;
};

// Stream phase tags. Keeping them in one enum avoids accidental key
// collisions between modules that share a user seed.
namespace stream_phase {
constexpr std::uint64_t kInit = 1;       // factor initialization jitter
constexpr std::uint64_t kGibbs = 2;      // E-step sweeps
constexpr std::uint64_t kFinalPass = 3;  // posterior-mean pass
constexpr std::uint64_t kSplitFacet = 4;
constexpr std::uint64_t kSplitAssign = 5;
constexpr std::uint64_t kSynth = 6;
constexpr std::uint64_t kCvFolds = 7;
}  // namespace stream_phase

}  // namespace latrec
