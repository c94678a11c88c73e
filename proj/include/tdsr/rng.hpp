#pragma once

#include <cstdint>
#include <vector>

namespace tdsr {

/// SplitMix64 generator. Fully specified so that seeded runs produce the
/// same streams on every platform, unlike std::shuffle + distributions.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform draw from [0, bound) by rejection sampling; bound > 0.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t v = next();
    while (v >= limit) v = next();
    return v % bound;
  }

 private:
  std::uint64_t state_;
};

/// Mixes independent stream/index coordinates into a fresh seed. Pure, so
/// trial seeds can be recomputed in any order.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                 std::uint64_t index) {
  SplitMix64 g(base ^ (stream * 0xd1342543de82ef95ull) ^
               (index * 0x2545f4914f6cdd1dull) ^ 0x5851f42d4c957f2dull);
  g.next();
  return g.next();
}

/// In-place Fisher-Yates shuffle driven by SplitMix64.
template <typename T>
void shuffle(std::vector<T>& items, SplitMix64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(items[i - 1], items[j]);
  }
}

/// k distinct indices drawn uniformly from 0..n-1 (partial Fisher-Yates).
inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k,
                                               SplitMix64& rng) {
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k && i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.next_below(n - i));
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
  return out;
}

}  // namespace tdsr
