#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace poip {

/// Deterministic 64-bit generator (SplitMix64 step) with label-forked
/// streams. Forking derives a child stream from the origin seed and a label
/// hash, so the draws of one field never shift another field's stream and
/// output is byte-identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : origin_(seed), state_(seed) {}

  std::uint64_t next_u64() {
    // SplitMix64 (Steele, Lea, Flood 2014).
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [lo, hi] inclusive, exactly uniform (Lemire with rejection).
  std::int64_t next_int(std::int64_t lo, std::int64_t hi) {
    std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next_u64());  // full 64-bit range
    std::uint64_t x = next_u64();
    unsigned __int128 m = static_cast<unsigned __int128>(x) * span;
    auto l = static_cast<std::uint64_t>(m);
    if (l < span) {
      std::uint64_t t = -span % span;
      while (l < t) {
        x = next_u64();
        m = static_cast<unsigned __int128>(x) * span;
        l = static_cast<std::uint64_t>(m);
      }
    }
    return lo + static_cast<std::int64_t>(m >> 64);
  }

  /// Uniform real in [lo, hi).
  double next_real(double lo, double hi) { return lo + next_double() * (hi - lo); }

  /// Independent child stream for a named field; unaffected by draws made
  /// from this stream.
  Rng fork(std::string_view label) const {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a 64
    for (char c : label) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ULL;
    }
    Rng child(origin_ ^ h);
    child.next_u64();  // decouple nearby seeds
    return child;
  }

  /// Child stream for an indexed field (e.g. per-instance substreams).
  Rng fork(std::string_view label, std::uint64_t index) const {
    Rng child = fork(label);
    child.state_ += 0x9e3779b97f4a7c15ULL * (index + 1);
    return child;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      auto j = static_cast<std::size_t>(next_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t origin_;
  std::uint64_t state_;
};

}  // namespace poip
