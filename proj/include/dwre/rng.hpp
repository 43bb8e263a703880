#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>

namespace dwre {

// SplitMix64 finalizer: a bijection on 64-bit words with full avalanche.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Builds a stream key from a master seed, a label and integer words.
/// Coordinates are packed two per word as 32-bit halves, so distinct sites
/// with |z_i| < 2^31 give distinct inputs to the mixing chain.
class StreamKey {
 public:
  StreamKey(std::uint64_t seed, std::string_view label)
      : key_(mix64(seed ^ mix64(hash_label(label)))) {}

  StreamKey& add(std::uint64_t word) {
    key_ = mix64(key_ ^ mix64(word + 0x632be59bd9b4e019ULL * ++count_));
    return *this;
  }

  StreamKey& add_coords(std::span<const std::int64_t> coords) {
    add(coords.size());
    for (std::size_t i = 0; i < coords.size(); i += 2) {
      std::uint64_t lo = static_cast<std::uint32_t>(coords[i]);
      std::uint64_t hi = i + 1 < coords.size() ? static_cast<std::uint32_t>(coords[i + 1]) : 0;
      add(lo | (hi << 32));
    }
    return *this;
  }

  std::uint64_t value() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t count_ = 0;
};

/// Counter-based generator: output i is mix64(key + i * golden). Copyable,
/// and any draw is a pure function of (key, index).
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}
  explicit CounterRng(const StreamKey& key) : key_(key.value()) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() { return mix64(key_ + 0x9e3779b97f4a7c15ULL * counter_++); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Poisson variate by sequential inversion; intended for small means.
  std::uint32_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    double u = uniform();
    double p = std::exp(-mean);
    double cdf = p;
    std::uint32_t k = 0;
    while (u >= cdf && k < 100000) {
      ++k;
      p *= mean / k;
      cdf += p;
      if (p == 0.0 && cdf < u) break;
    }
    return k;
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Per-sample stream seed: sample i of a run seeded with `seed`.
inline std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index) {
  return StreamKey(seed, "sample").add(index).value();
}

}  // namespace dwre
