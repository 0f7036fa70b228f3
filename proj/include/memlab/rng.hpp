#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string_view>

namespace memlab {

/// Counter-based 64-bit generator.
///
/// Output k of a stream is a bijective mix of (key, k), so a stream can be
/// split into independent children keyed by an integer or a tag. Per-sample
/// draws take `rng.split(i)` and are therefore independent of visiting order.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) noexcept;

  [[nodiscard]] Rng split(std::uint64_t tag) const noexcept;
  [[nodiscard]] Rng split(std::string_view tag) const noexcept;

  std::uint64_t operator()() noexcept { return next_u64(); }
  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() noexcept;
  /// Uniform integer in [0, n); n must be positive.
  std::size_t index(std::size_t n) noexcept;

  [[nodiscard]] std::uint64_t key() const noexcept { return key_; }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace memlab
