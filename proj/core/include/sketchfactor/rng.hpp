#pragma once

// Counter-based pseudo-random primitives. Every value is a pure function of
// the key words fed into the hash, so a sketch entry keyed by
// (seed, kind, column, row) can be recomputed on demand in O(1) without ever
// materializing the sketch matrix. The mixer is the splitmix64 finalizer,
// whose avalanche behaviour is good enough for Monte-Carlo work.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace sketchfactor {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t hash2(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (b + 0x9e3779b97f4a7c15ull));
}

inline std::uint64_t hash3(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return splitmix64(hash2(a, b) ^ (c + 0x632be59bd9b4e019ull));
}

inline std::uint64_t hash4(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                           std::uint64_t d) {
  return splitmix64(hash3(a, b, c) ^ (d + 0xd1b54a32d192ed03ull));
}

// Uniform double in [0, 1) from the top 53 bits.
inline double u64_to_unit(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Uniform double in (0, 1]; safe as a log argument.
inline double u64_to_unit_open(std::uint64_t h) {
  return (static_cast<double>(h >> 11) + 1.0) * 0x1.0p-53;
}

// Standard normal via Box-Muller driven by the hashed counter. The second
// uniform is derived from the first hash so one key word yields one sample.
inline double u64_to_gaussian(std::uint64_t h) {
  const double u1 = u64_to_unit_open(h);
  const double u2 = u64_to_unit(splitmix64(h ^ 0xa0761d6478bd642full));
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

// Small sequential generator for sampling loops (seeding, coresets,
// shuffles). splitmix64 stream; not cryptographic, fully reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  double uniform() { return u64_to_unit(next()); }

  double gaussian() { return u64_to_gaussian(next()); }

  // Uniform integer in [0, bound). Modulo bias is below 2^-40 for the bounds
  // used here.
  std::uint64_t below(std::uint64_t bound) { return next() % bound; }

  // Index drawn proportionally to the given nonnegative weights.
  std::size_t categorical(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform() * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      u -= weights[i];
      if (u < 0.0) return i;
    }
    return weights.empty() ? 0 : weights.size() - 1;
  }

  // Fisher-Yates shuffle of [0, n).
  std::vector<int> permutation(int n) {
    std::vector<int> p(n);
    for (int i = 0; i < n; ++i) p[i] = i;
    for (int i = n - 1; i > 0; --i) {
      int j = static_cast<int>(below(static_cast<std::uint64_t>(i) + 1));
      std::swap(p[i], p[j]);
    }
    return p;
  }

 private:
  std::uint64_t state_;
};

}  // namespace sketchfactor
