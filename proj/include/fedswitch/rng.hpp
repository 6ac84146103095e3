#pragma once

// Counter-based random streams. Every random draw in a run is made from a
// stream derived from an RngStreamKey, so a trajectory is a pure function of
// the run seed and draws never depend on the order in which clients execute.

#include <cmath>
#include <cstdint>
#include <limits>

namespace fedswitch {

enum class Purpose : std::uint8_t {
  subset = 1,
  value_batch = 2,
  grad_batch = 3,
  init = 4,
  data_split = 5,
  data_partition = 6,
  synthetic = 7,
};

// Which oracle component a batch is drawn for.
enum class Component : std::uint8_t { objective = 0, constraint = 1 };

struct RngStreamKey {
  static constexpr std::int64_t kNone = -1;

  std::uint64_t run_seed = 0;
  std::int64_t round = kNone;
  std::int64_t client = kNone;
  std::int64_t step = kNone;
  Purpose purpose = Purpose::init;
  std::uint8_t channel = 0;  // sub-stream, e.g. objective vs constraint batch

  friend bool operator==(const RngStreamKey&, const RngStreamKey&) = default;
};

namespace detail {

constexpr std::uint64_t splitmix_finalize(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  return splitmix_finalize(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

}  // namespace detail

/// SplitMix64 generator. Satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t state) : state_(state) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return detail::splitmix_finalize(state_);
  }

  /// Uniform integer in [0, bound) by Lemire's multiply-and-reject method.
  std::uint64_t below(std::uint64_t bound) {
    std::uint64_t x = (*this)();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        x = (*this)();
        m = static_cast<__uint128_t>(x) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (one variate per call).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::uint64_t state_;
};

constexpr std::uint64_t stream_seed(const RngStreamKey& key) {
  std::uint64_t h = detail::splitmix_finalize(key.run_seed ^ 0x6a09e667f3bcc909ULL);
  h = detail::mix(h, static_cast<std::uint64_t>(key.round));
  h = detail::mix(h, static_cast<std::uint64_t>(key.client));
  h = detail::mix(h, static_cast<std::uint64_t>(key.step));
  h = detail::mix(h, static_cast<std::uint64_t>(key.purpose));
  h = detail::mix(h, static_cast<std::uint64_t>(key.channel));
  return h;
}

inline SplitMix64 make_stream(const RngStreamKey& key) { return SplitMix64(stream_seed(key)); }

}  // namespace fedswitch
