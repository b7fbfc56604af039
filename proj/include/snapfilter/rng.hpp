// Copyright 2026 The snapfilter Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace snapfilter {

/// SplitMix64 step; used to hash stream keys into generator state.
constexpr std::uint64_t splitmix64(std::uint64_t& x) noexcept {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Folds a sequence of integers into one 64-bit key.
constexpr std::uint64_t mix_keys(std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t k : keys) {
    std::uint64_t s = h ^ k;
    h = splitmix64(s);
  }
  return h;
}

/// Stream tags used to derive independent substreams from a master seed.
enum class StreamTag : std::uint64_t {
  kParticle = 1,
  kResample = 2,
  kPilot = 3,
  kTrial = 4,
  kForwardMc = 5,
  kStageOne = 6,
};

/*!
 * xoshiro256** generator whose state is derived from a master seed and a
 * tuple of stream coordinates (trial, tag, particle index, ...).
 *
 * Two generators built from different coordinates are statistically
 * independent for all practical purposes, so particles can be propagated in
 * any order or on any thread and still reproduce bit-identical results.
 */
class StreamRng {
 public:
  using result_type = std::uint64_t;

  StreamRng() : StreamRng(0, {}) {}
  StreamRng(std::uint64_t seed, std::initializer_list<std::uint64_t> coords) {
    std::uint64_t x = seed ^ mix_keys(coords);
    for (auto& w : s_) w = splitmix64(x);
  }

  /// Child stream: deterministic function of this stream's identity and `coords`.
  StreamRng derive(std::initializer_list<std::uint64_t> coords) const {
    StreamRng child;
    std::uint64_t x = s_[0] ^ (s_[1] << 1) ^ (s_[2] << 2) ^ (s_[3] << 3) ^ mix_keys(coords);
    for (auto& w : child.s_) w = splitmix64(x);
    return child;
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1]; safe inside log().
  double uniform_pos() noexcept { return 1.0 - uniform(); }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace snapfilter
