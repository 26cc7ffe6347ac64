#pragma once

#include <cmath>
#include <cstdint>

namespace ctfsim {

namespace detail {

inline constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ull;

// Finalizer of SplitMix64; full-avalanche 64-bit mix.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ull;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebull;
  z ^= z >> 31;
  return z;
}

}  // namespace detail

// Counter-based generator: the i-th output is mix64(key + i*gamma), a pure
// function of (key, i). Streams for different keys are decorrelated, so
// Monte-Carlo work can be split per run or per matrix element without any
// shared state; results never depend on scheduling order.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() { return detail::mix64(key_ + ++counter_ * detail::kGamma); }

  // Uniform on [0, 1), 53-bit mantissa resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal deviate, Box-Muller with the second value cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 == 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * 3.14159265358979323846 * uniform();
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Child stream keys. rng_stream(seed, run) or rng_stream(seed, row, col)
// derive generators that are independent of each other and of Rng(seed)
// itself (the salt keeps stream keys off the parent's output sequence).
inline std::uint64_t rng_stream(std::uint64_t key, std::uint64_t a) {
  return detail::mix64((key ^ 0x5851f42d4c957f2dull) + (a + 1) * detail::kGamma);
}

inline std::uint64_t rng_stream(std::uint64_t key, std::uint64_t a, std::uint64_t b) {
  return rng_stream(rng_stream(key, a), b);
}

inline std::uint64_t rng_stream(std::uint64_t key, std::uint64_t a, std::uint64_t b,
                                std::uint64_t c) {
  return rng_stream(rng_stream(key, a, b), c);
}

}  // namespace ctfsim
