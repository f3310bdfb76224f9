#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pathsample/log_scaled.hpp"
#include "pathsample/net.hpp"

namespace pathsample {

/// Per-coordinate input weights w_j used to normalize path weights.
/// q = 1: w_j = max_x |x_j|. q > 1: w_j = (mean_x |x_j|^{q*})^{1/q*}, 1/q + 1/q* = 1.
struct InputWeighting {
  double q = 1.0;
  Vector weights;
};

/// q in [1, inf]; q = inf means q* = 1.
InputWeighting input_weights(const Dataset& data, double q);
/// All-ones weighting (plain path sums).
InputWeighting unit_weights(std::size_t dim);

/// Absolute propagation vectors of a network under an input weighting:
///   prefix[0] = w, prefix[l] = |W_l| prefix[l-1]
///   suffix[L] = 1, suffix[l] = |W_{l+1}|^T suffix[l+1]
/// so that sum_j prefix[l][j] * suffix[l][j] is the path variation for every l.
struct PathChain {
  std::vector<ScaledVector> prefix;
  std::vector<ScaledVector> suffix;
  LogScaled variation;
  bool degenerate = false;  // variation == 0
};

PathChain build_chain(const Network& net, const InputWeighting& weighting);

/// Path variation: sum over paths of w_{j_0} * prod |w|.
LogScaled variation(const Network& net, const Dataset& data, double q);

enum class MarginalMode { collapsed, doubled };

/// Marginal of the path distribution at hidden layer 1 <= layer <= L-1.
/// Doubled mode returns 2 d_layer entries, [(j,+) block; (j,-) block], where
/// the sign of a unit is the sign of the edge a path leaves it by.
Vector marginal(const Network& net, const InputWeighting& weighting, std::size_t layer,
                MarginalMode mode);
Vector marginal(const Network& net, const PathChain& chain, std::size_t layer, MarginalMode mode);

/// exp(H_{1/2}(p) / 2) = sum_i sqrt(p_i).
double renyi_half_exp(const Vector& p);

/// (1/L) * (1 + sum_{l=1}^{L-1} renyi_half_exp(marginal(l))).
double path_complexity(const Network& net, const Dataset& data, double q, MarginalMode mode);
double path_complexity(const Network& net, const InputWeighting& weighting, MarginalMode mode);

struct PathMeasures {
  LogScaled variation;
  double complexity = 1.0;
  std::vector<Vector> marginals;  // hidden layers 1..L-1
  MarginalMode mode = MarginalMode::doubled;
};

PathMeasures path_measures(const Network& net, const InputWeighting& weighting, MarginalMode mode);

/// |W_L| |W_{L-1}| ... |W_1| with a shared exponent.
ScaledMatrix product_abs_scaled(const Network& net);
/// Rendered product; throws numeric error when it leaves double range.
Matrix product_abs(const Network& net);

struct SpectralEstimate {
  double value = 0.0;
  int iterations = 0;
  double residual = 0.0;  // ||B v - lambda v|| / lambda for the Gram matrix B
  bool converged = true;
};

/// Largest singular value by power iteration on the smaller Gram matrix,
/// started from a pinned pseudo-random vector.
SpectralEstimate spectral_norm(const Matrix& a, double tolerance = 1e-10, int max_iterations = 10000);

/// Matrix norm induced by the vector q-norm, q in {1, 2, inf}.
/// q = 2 throws numeric error (with the residual) if power iteration stalls.
double induced_norm(const Matrix& a, double q);

enum class GroupOrientation { rows, columns };

/// Sum of q-norms of rows (default) or columns.
double group_norm_q1(const Matrix& a, double q, GroupOrientation orientation = GroupOrientation::rows);

/// Hoelder-type upper bounds on the q-path variation, q in {1, 2}:
///   first  = max_x ||x||_{q*} * k^{1-1/q*} * ||prod |W|||_{q*}   (induced)
///   second = max_x ||x||_{q*} * ||prod |W|||_{q,1}               (row groups)
std::pair<double, double> variation_bounds(const Network& net, const Dataset& data, double q);

struct PathNorm {
  std::vector<LogScaled> per_output;
  LogScaled total;
};

/// phi_p: per output j, (sum over paths ending at j of prod |w|^p)^{1/p}; total sums outputs.
PathNorm path_norm_phi(const Network& net, double p);

/// Brute-force path sums straight from the definition.
struct PathEnumeration {
  double variation = 0.0;
  std::vector<Vector> marginals;                 // node layers 0..L, collapsed
  std::vector<std::vector<std::uint32_t>> paths;  // (j_0, ..., j_L)
  std::vector<double> weights;                   // w_{j_0} * prod |w| per path
};

PathEnumeration enumerate_paths_oracle(const Network& net, const InputWeighting& weighting,
                                       double max_paths = 1e6);

}  // namespace pathsample
