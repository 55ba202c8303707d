// Copyright (c) 2026 The causalflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace causalflow::rng {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Order-sensitive hash of a key tuple; used to derive independent substreams.
constexpr std::uint64_t derive(std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = 0x2545f4914f6cdd1dULL;
  for (auto k : keys) h = splitmix64(h ^ splitmix64(k));
  return h;
}

/// Uniform in the open interval (0, 1) from 53 random bits.
constexpr double to_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Counter-based standard normal: a pure function of the key tuple.
inline double normal_at(std::initializer_list<std::uint64_t> keys) noexcept {
  const auto h = derive(keys);
  const double u1 = to_unit(splitmix64(h));
  const double u2 = to_unit(splitmix64(h ^ 0xd1b54a32d192ed03ULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double uniform_at(std::initializer_list<std::uint64_t> keys) noexcept {
  return to_unit(splitmix64(derive(keys)));
}

/// Small sequential generator; deterministic across platforms, unlike the
/// distributions in <random>.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) noexcept : state_(splitmix64(seed)) {}

  std::uint64_t next() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return splitmix64(state_);
  }

  double uniform() noexcept { return to_unit(next()); }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept { return n == 0 ? 0 : next() % n; }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace causalflow::rng
