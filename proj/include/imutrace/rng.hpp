#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace imutrace {

/// Seeded generator with a fixed, documented algorithm so datasets and trained
/// models reproduce across platforms: std::mt19937_64 for the raw stream (its
/// output sequence is pinned by the standard), SplitMix64 for deriving
/// sub-seeds, and hand-rolled uniform/normal/integer draws because the
/// standard distributions are implementation-defined.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm =
      "mt19937_64; splitmix64 sub-seeds; uniform=top 53 bits; normal=Box-Muller; "
      "bounded ints by rejection";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream for (seed, index) pairs, so per-item work can run in
  /// any order and still reproduce.
  static Rng derive(std::uint64_t seed, std::uint64_t index);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  double normal();
  double normal(double mean, double sigma) { return mean + sigma * normal(); }
  /// Exponential with the given rate (mean 1/rate).
  double exponential(double rate);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace imutrace
