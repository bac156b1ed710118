#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace crpslab {

/// SplitMix64 finalizer (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Portable counter-based generator.
///
/// A stream is identified by a 64-bit key; its i-th output (i = 1, 2, ...) is
/// `mix64(key + i * 0x9e3779b97f4a7c15)`. A seed maps to the key `mix64(seed)`.
/// `split(id)` derives an independent child stream with key
/// `mix64(key ^ mix64(id + 0x632be59bd9b4e019))`, so any (seed, path of split ids)
/// reproduces the same numbers on every platform. All derived quantities
/// (uniforms, normals, permutations) are computed here rather than through
/// `<random>` distributions, whose outputs are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : key_(mix64(seed)) {}

  std::uint64_t next() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGamma);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Standard normal via the cosine branch of Box-Muller (two uniforms per draw).
  double normal() noexcept;

  /// Uniform integer in [0, bound). Unbiased (Lemire's multiply-and-reject).
  std::uint64_t below(std::uint64_t bound) noexcept;

  Rng split(std::uint64_t stream) const noexcept {
    Rng child(0);
    child.key_ = mix64(key_ ^ mix64(stream + 0x632be59bd9b4e019ULL));
    child.counter_ = 0;
    return child;
  }

  template <class T>
  void shuffle(std::vector<T>& values) noexcept {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  /// Uniform random permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

  /// k distinct indices from 0..n-1 in draw order (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Seed of the `index`-th independent sub-experiment of `seed`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(seed ^ mix64(index + 0x9e3779b97f4a7c15ULL));
}

}  // namespace crpslab
