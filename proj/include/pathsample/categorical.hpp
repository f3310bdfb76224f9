#pragma once

#include <cstdint>
#include <vector>

#include "pathsample/rng.hpp"

namespace pathsample {

/// Constant-time categorical sampler over the nonzero entries of a weight
/// vector. Uses Vose's alias table for supports of 8 or more entries and a
/// linear CDF scan below that.
class CategoricalSampler {
 public:
  static constexpr std::size_t kAliasThreshold = 8;

  CategoricalSampler() = default;
  /// Weights must be finite, nonnegative, with positive sum.
  explicit CategoricalSampler(const std::vector<double>& weights);

  std::uint32_t operator()(Philox4x64& rng) const;

  /// Indices with positive weight, ascending.
  const std::vector<std::uint32_t>& support() const noexcept { return support_; }
  /// Normalized probabilities aligned with support().
  const std::vector<double>& probabilities() const noexcept { return probabilities_; }
  bool uses_alias() const noexcept { return !alias_.empty(); }

 private:
  std::vector<std::uint32_t> support_;
  std::vector<double> probabilities_;
  std::vector<double> cdf_;              // scan mode
  std::vector<double> threshold_;        // alias mode
  std::vector<std::uint32_t> alias_;     // alias mode, positions into support_
};

}  // namespace pathsample
