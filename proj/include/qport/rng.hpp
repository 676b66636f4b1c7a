#pragma once

// Counter-based random numbers. Every draw is a pure function of
// (key, counter), so any entry of any matrix can be regenerated
// independently of generation order or thread layout.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace qport::rng {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Folds a sequence of words into one stream key.
constexpr std::uint64_t derive_key(std::initializer_list<std::uint64_t> words) noexcept {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (auto w : words) h = mix64(h ^ mix64(w));
  return h;
}

/// Domain tags keep the variance draws and the return draws on disjoint streams.
enum class Domain : std::uint64_t { Variance = 1, Returns = 2, Sample = 3 };

/// A stream of random bits addressed by (key, counter).
class Stream {
 public:
  constexpr explicit Stream(std::uint64_t key) noexcept : key_(key) {}

  constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
    return mix64(key_ ^ mix64(counter + 0x2545f4914f6cdd1dULL));
  }

  /// Uniform on the open interval (0, 1).
  constexpr double uniform(std::uint64_t counter) const noexcept {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller, consuming counters 2c and 2c+1.
  double normal(std::uint64_t counter) const noexcept {
    const double u1 = uniform(2 * counter);
    const double u2 = uniform(2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// +1 or -1 with equal probability.
  constexpr double sign(std::uint64_t counter) const noexcept {
    return (bits(counter) >> 63) ? 1.0 : -1.0;
  }

 private:
  std::uint64_t key_;
};

}  // namespace qport::rng
