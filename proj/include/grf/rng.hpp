#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace grf {

namespace detail {

// splitmix64 finalizer; full-avalanche 64-bit mix.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// Deterministic, forkable random stream (xoshiro256++ core).
//
// Every consumer gets its own stream derived from (parent key, tag). The
// child key depends only on the identities, never on how much the parent
// stream has been consumed, so sequential and concurrent execution see
// identical randomness. Fixed-algorithm uniform/normal draws keep whole
// runs bit-reproducible across platforms.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : key_(seed) { reseed(); }

  // Child stream addressed by an integer tag.
  [[nodiscard]] RngStream fork(std::uint64_t tag) const {
    return RngStream(detail::mix64(detail::mix64(key_ ^ 0x6a09e667f3bcc909ULL) + tag), nullptr);
  }

  // Child stream addressed by a label, e.g. fork("chain").fork(j).
  [[nodiscard]] RngStream fork(std::string_view label) const {
    return fork(detail::fnv1a64(label));
  }

  std::uint64_t key() const { return key_; }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe as a log() argument.
  double uniform_pos() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

  // Uniform integer in [0, bound); bound >= 1. Rejection-free is not needed
  // at the bias level 2^-64.
  std::uint64_t uniform_below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(bound));
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller; consumes exactly two uniforms per call.
  double normal(double mean = 0.0, double sd = 1.0) {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sd * r * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  RngStream(std::uint64_t key, std::nullptr_t) : key_(key) { reseed(); }

  void reseed() {
    std::uint64_t s = key_;
    for (auto& word : state_) word = detail::mix64(s = detail::mix64(s));
    // xoshiro must not start from the all-zero state.
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
  }

  std::uint64_t key_;
  std::array<std::uint64_t, 4> state_{};
};

}  // namespace grf
