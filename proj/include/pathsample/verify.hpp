#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pathsample/net.hpp"
#include "pathsample/rng.hpp"

namespace pathsample {

struct CheckResult {
  std::string name;
  bool passed = false;
  double observed = 0.0;
  double bound = 0.0;
  std::uint64_t seed = 0;
  std::string details;
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckResult> checks;

  bool passed() const;
  std::size_t failures() const;
};

struct VerifyOptions {
  std::uint64_t seed = 7;
  // upperbound
  int networks = 20;
  int resamples = 200;
  // lowerbound
  int lower_resamples = 500;
  int rate_resamples = 100;
  // mle
  int mle_trials = 20;
  int mle_candidates = 1000;
  // cardinality
  int cardinality_networks = 10;
  unsigned partition_max = 30;
  // variation
  int variation_networks = 100;
};

/// Standard normal weights.
Network random_network(const std::vector<std::size_t>& dims, Philox4x64& rng,
                       Activation activation = Activation::relu());
/// Standard normal inputs, no labels.
Dataset random_dataset(std::size_t n, std::size_t d, Philox4x64& rng);

/// W_1 = [[1, -2], [-3, 4]], W_2 = [[1, 1]], relu.
Network reference_network();
/// {[1, 0], [0, -1], [-1, 1]}.
Dataset reference_dataset();

SuiteReport verify_upper_bound(const VerifyOptions& options);
SuiteReport verify_lower_bound(const VerifyOptions& options);
SuiteReport verify_mle(const VerifyOptions& options);
SuiteReport verify_cardinality(const VerifyOptions& options);
SuiteReport verify_variation_bounds(const VerifyOptions& options);

/// "upperbound", "lowerbound", "mle", "cardinality", "variation" or "all".
std::vector<SuiteReport> run_suites(const std::string& name, const VerifyOptions& options);

}  // namespace pathsample
