#pragma once

// Seeded randomness with a pinned draw mapping. std::uniform_int_distribution
// is implementation-defined, which would break the bit-for-bit (config, seed)
// reproducibility contract across toolchains, so the mapping lives here.

#include <cstdint>
#include <random>
#include <vector>

#include "plancheck/algebra.hpp"

namespace plancheck {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, n) by rejection sampling.
  std::size_t below(std::size_t n) {
    if (n == 0) throw InputError("Rng::below(0)");
    std::uint64_t span = ~std::uint64_t{0};
    std::uint64_t limit = span - span % n;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return static_cast<std::size_t>(v % n);
  }

  /// Uniform in [0, 1) with 53 bits of precision.
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool chance(double probability) { return unit() < probability; }

  template <typename T>
  const T& pick(const std::vector<T>& items) {
    if (items.empty()) throw InputError("Rng::pick on empty vector");
    return items[below(items.size())];
  }

  /// Derive an independent stream (for per-trial generators).
  Rng fork() { return Rng(engine_() ^ 0x9e3779b97f4a7c15ull); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace plancheck
