#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "pathsample/sampler.hpp"

namespace pathsample {

struct MCEstimate {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation across resamples
  int resamples = 0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::vector<double> values;

  /// Standard error of the mean.
  double se() const;
};

MCEstimate summarize(std::vector<double> values);

/// Mean over R resamples of (1/n) sum_{x in S} ||f(x; W~) - f(x; W)||^2.
/// Resample r uses streams [r * streams, (r + 1) * streams) of `seed`.
MCEstimate mc_error(const Network& net, const Dataset& data, double q, std::uint64_t draws,
                    int resamples, std::uint64_t seed, const SampleOptions& options = {});
MCEstimate mc_error(const ConditionalSampler& sampler, const Dataset& data, std::uint64_t draws,
                    int resamples, std::uint64_t seed, const SampleOptions& options = {});

/// (V zeta L / sqrt(M))^2.
double error_upper_bound(double variation, double zeta, std::size_t depth, std::uint64_t draws);

/// Two-layer all-ones network with f(x) = 0 at an alternating +-1 input.
struct LowerBoundInstance {
  Network net;
  Vector x;
  double xi1 = 0.0;  // (1 + sum_j sqrt(p_{j_1})) / 2
};

LowerBoundInstance lower_bound_instance(std::size_t d, std::size_t d1);
/// xi1^2 / (32 M).
double lower_bound_rhs(double xi1, std::uint64_t draws);

/// Markov distribution over sign-split paths. Edge layer L holds the joint
/// p(j_L, u_{L-1}); edge layers m < L hold conditionals p(u_{m-1} | u_m).
/// Keys are (target, source).
struct MarkovModel {
  std::vector<std::size_t> dims;
  std::vector<std::map<std::pair<std::uint32_t, std::uint32_t>, double>> layers;

  double probability(std::size_t m, std::uint32_t source, std::uint32_t target) const;
  /// log p(path); -inf if any factor is zero. Path is (u_0, ..., u_{L-1}, j_L).
  double log_probability(const std::vector<std::uint32_t>& path) const;
};

MarkovModel to_model(const EmpiricalMarkov& em);

/// Symmetric Dirichlet(1) redraw of every row of `model`, on the row's
/// support plus one extra random source.
MarkovModel random_candidate(const MarkovModel& model, Philox4x64& rng);

/// ln( M! prod_paths p(path)^K / K! ). Needs counts sampled with keep_paths.
/// Returns -inf when the model puts zero mass on an observed path.
double log_likelihood(const PathCounts& counts, const MarkovModel& model);

/// Number of integer partitions of k.
std::uint64_t partition_count(unsigned k);
/// Same count by explicit enumeration of nonincreasing sequences.
std::uint64_t partition_count_exhaustive(unsigned k);

/// 16 pinned points on the unit sphere of R^d.
Matrix default_probes(std::size_t d, std::size_t count = 16);

/// Distinct functions f(.; p~) over all M-multisets of positive-probability
/// paths, identified by their values on `probes` (tolerance 1e-9).
std::uint64_t count_realized(const Network& net, const Dataset& data, double q,
                             std::uint64_t draws, const Matrix& probes);

/// M (ln(d e) + L ln 8).
double cardinality_log_bound(std::uint64_t draws, std::size_t depth, std::size_t dim);

struct CoveringSize {
  std::uint64_t draws = 0;   // M_eps
  double log_n = 0.0;        // cardinality_log_bound(M_eps, L, d)
  double closed_form = 0.0;  // 9 V^2 zeta^2 L^2 (L + ln(d e)) / (gamma^2 eps^2)
};

CoveringSize covering_size(double variation, double zeta, std::size_t depth, double gamma,
                           double eps, std::size_t dim);

struct ProjectionResult {
  Network net;
  std::size_t effective_dim = 0;  // rank of the data matrix
};

/// Replaces the rows of W_1 by their orthogonal projections onto span(S).
ProjectionResult effective_projection(const Network& net, const Dataset& data);

}  // namespace pathsample
