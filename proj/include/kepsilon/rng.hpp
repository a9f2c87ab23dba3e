//
// Copyright 2026 The kepsilon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Counter-based pseudorandom streams.
//
// Every random quantity in the library is drawn from a CounterRng whose key is
// derived from a master seed and a stream identifier (class index, record
// index, run index...). The i-th output of a stream is the SplitMix64
// finaliser applied to key + i * golden-gamma, so a stream's output depends
// only on (key, position) and never on which thread consumed other streams.

#ifndef KEPSILON_RNG_HPP_
#define KEPSILON_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace kepsilon {

namespace rng_internal {

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t Mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace rng_internal

// Derives the key of a child stream. Distinct (parent, stream) pairs map to
// unrelated keys.
constexpr std::uint64_t DeriveSeed(std::uint64_t parent, std::uint64_t stream) {
  using rng_internal::Mix64;
  return Mix64(Mix64(parent ^ 0x6a09e667f3bcc908ULL) +
               Mix64(stream + rng_internal::kGoldenGamma));
}

class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() {
    ++counter_;
    return rng_internal::Mix64(key_ + counter_ * rng_internal::kGoldenGamma);
  }

  // Uniform on the open interval (0, 1), with 53 bits of resolution.
  double UniformOpen() {
    constexpr double kScale = 0x1.0p-53;
    return (static_cast<double>((*this)() >> 11) + 0.5) * kScale;
  }

  // Uniform integer in [0, bound); bound must be positive. Rejection sampling
  // removes modulo bias.
  std::uint64_t UniformBelow(std::uint64_t bound) {
    const std::uint64_t limit = max() - max() % bound;
    std::uint64_t x;
    do {
      x = (*this)();
    } while (x >= limit);
    return x % bound;
  }

  // Standard normal draw (Box-Muller, cosine branch only).
  double StandardNormal() {
    const double u1 = UniformOpen();
    const double u2 = UniformOpen();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  constexpr std::uint64_t key() const { return key_; }
  constexpr std::uint64_t position() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace kepsilon

#endif  // KEPSILON_RNG_HPP_
