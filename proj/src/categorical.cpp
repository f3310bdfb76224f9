#include "pathsample/categorical.hpp"

#include <cmath>

#include "pathsample/error.hpp"

namespace pathsample {

CategoricalSampler::CategoricalSampler(const std::vector<double>& weights) {
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double w = weights[i];
    require(std::isfinite(w) && w >= 0.0, ErrorKind::precondition,
            "categorical weights must be finite and nonnegative");
    if (w > 0.0) {
      support_.push_back(static_cast<std::uint32_t>(i));
      total += w;
    }
  }
  require(total > 0.0, ErrorKind::degenerate, "categorical distribution has no mass");
  probabilities_.reserve(support_.size());
  for (std::uint32_t i : support_) probabilities_.push_back(weights[i] / total);

  const std::size_t n = support_.size();
  if (n < kAliasThreshold) {
    cdf_.resize(n);
    double running = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      running += probabilities_[i];
      cdf_[i] = running;
    }
    cdf_.back() = 1.0;
    return;
  }

  threshold_.assign(n, 1.0);
  alias_.resize(n);
  for (std::size_t i = 0; i < n; ++i) alias_[i] = static_cast<std::uint32_t>(i);
  std::vector<double> scaled(n);
  std::vector<std::uint32_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = probabilities_[i] * static_cast<double>(n);
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    const std::uint32_t s = small.back();
    small.pop_back();
    const std::uint32_t l = large.back();
    threshold_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  // Leftovers are 1 up to rounding.
  for (std::uint32_t i : small) threshold_[i] = 1.0;
  for (std::uint32_t i : large) threshold_[i] = 1.0;
}

std::uint32_t CategoricalSampler::operator()(Philox4x64& rng) const {
  const double u = rng.uniform();
  if (alias_.empty()) {
    std::size_t i = 0;
    while (i + 1 < cdf_.size() && u >= cdf_[i]) ++i;
    return support_[i];
  }
  const double t = u * static_cast<double>(threshold_.size());
  auto slot = static_cast<std::size_t>(t);
  if (slot >= threshold_.size()) slot = threshold_.size() - 1;
  const double coin = t - static_cast<double>(slot);
  return support_[coin < threshold_[slot] ? slot : alias_[slot]];
}

}  // namespace pathsample
