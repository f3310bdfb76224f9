#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pathsample/sampler.hpp"

namespace pathsample {

/// v_y - max_{j != y} v_j, y zero-based. Needs at least two classes.
double margin(const Vector& v, int y);

/// R_gamma(z): 0 below -gamma, 1 + z/gamma on [-gamma, 0], 1 above 0.
double ramp(double gamma, double z);

struct Losses {
  double zero_one = 0.0;     // mean of [margin <= 0]
  double margin_loss = 0.0;  // mean of [margin <= gamma]
  double ramp_mean = 0.0;    // mean of R_gamma(-margin)
};

Losses losses(const std::vector<double>& margins, double gamma);
Losses losses(const Network& net, const Dataset& data, double gamma);

/// Raw margins of the network on every labelled point.
std::vector<double> margins(const Network& net, const Dataset& data);

/// Median of the positive raw margins; throws when none are positive.
double default_gamma(const std::vector<double>& margins);

struct MarginStats {
  std::vector<double> raw;
  std::vector<double> normalized;  // raw / V_1
  LogScaled variation;             // V_1 with q = 1 weights from the data
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> edges;        // bins + 1 entries
  std::vector<std::uint64_t> counts;
};

MarginStats normalized_margins(const Network& net, const Dataset& data, std::size_t bins = 64);

struct BoundInputs {
  double variation = 0.0;
  double zeta = 1.0;
  std::size_t depth = 2;
  std::size_t dim = 1;
  std::uint64_t samples = 1;  // n
  std::size_t classes = 2;
  double gamma = 1.0;
  double delta = 0.05;
  double margin_loss = 0.0;  // empirical gamma-margin loss
};

enum class BoundMode { apriori, posthoc };

struct BoundResult {
  double value = 0.0;
  bool vacuous = false;  // value > 1
  BoundMode mode = BoundMode::apriori;
  // Grid indices, post-hoc only.
  long j1 = 0;
  long j2 = 0;
  long j3 = 0;
};

BoundResult generalization_bound(const BoundInputs& b, BoundMode mode);

struct Capacity {
  std::string name;
  LogScaled value;
};

struct CapacityReport {
  std::vector<Capacity> entries;
  /// V_2 / phi_2; reported, not asserted.
  double variation2_over_phi2 = 0.0;

  const Capacity& at(const std::string& name) const;
};

CapacityReport competing_capacities(const Network& net, const Dataset& data);

struct SweepRow {
  std::uint64_t draws = 0;
  double mean_acc = 0.0;
  double min_acc = 0.0;
  double max_acc = 0.0;
  double std_acc = 0.0;
  double mse = 0.0;
};

/// Classification accuracy of the argmax of a batch of outputs.
double accuracy(const Matrix& outputs, const std::vector<int>& labels);

/// R compression rounds per M; round r uses streams [r * streams, (r + 1) * streams).
std::vector<SweepRow> sweep_accuracy_vs_M(const Network& net, const Dataset& data, double q,
                                          const std::vector<std::uint64_t>& draws, int rounds,
                                          std::uint64_t seed, const SampleOptions& options = {});

}  // namespace pathsample
