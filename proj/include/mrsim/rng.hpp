#pragma once

// Counter-based random streams derived from a master seed and a label.
//
// A stream's n-th output depends only on (master seed, label, n), so two
// consumers never perturb each other no matter how their draws interleave.

#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <string_view>

namespace mrsim {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream() = default;
  explicit RngStream(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    return mix64(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform in [0, 1).
  double uniform() noexcept { return to_unit(operator()()); }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  double normal(double mean, double stddev);

  /// Random access draw that does not advance the sequential counter.
  double uniform_at(std::uint64_t index) const noexcept {
    return to_unit(mix64(key_ ^ mix64(index + 0x632BE59BD9B4E019ULL)));
  }

  /// Child stream keyed by this stream and a label.
  RngStream derive(std::string_view label) const noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  static double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

/// Deterministic stream for (master_seed, label).
RngStream seed_stream(std::uint64_t master_seed, std::string_view label) noexcept;

/// Hands out one stream per label and refuses to hand out the same label twice.
class SeedRegistry {
 public:
  explicit SeedRegistry(std::uint64_t master_seed) : master_(master_seed) {}

  /// Throws std::invalid_argument if `label` was already registered.
  RngStream stream(const std::string& label);

  std::uint64_t master_seed() const noexcept { return master_; }

 private:
  std::uint64_t master_;
  std::set<std::string, std::less<>> labels_;
};

}  // namespace mrsim
