#pragma once

#include <cstdint>
#include <vector>

namespace figdet {

// Portable deterministic generator (splitmix64). The exact algorithm is
// part of the reproducibility contract: the same seed yields the same
// stream on every platform, independent of the standard library.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Unbiased draw in [0, bound) via rejection sampling.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t limit = ~0ULL - (~0ULL % bound + 1) % bound;
    std::uint64_t v = next();
    while (v > limit) v = next();
    return v % bound;
  }

  // Uniform double in [0, 1) with 53 bits of precision.
  double next_double() {
    return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0);
  }

 private:
  std::uint64_t state_;
};

// Fisher-Yates shuffle driven by SplitMix64.
template <typename T>
void shuffle(std::vector<T>& items, SplitMix64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace figdet
