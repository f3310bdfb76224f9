#include "pathsample/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/SVD>

#include "pathsample/error.hpp"

namespace pathsample {

double MCEstimate::se() const {
  return resamples > 0 ? std / std::sqrt(static_cast<double>(resamples)) : 0.0;
}

MCEstimate summarize(std::vector<double> values) {
  MCEstimate e;
  e.resamples = static_cast<int>(values.size());
  if (values.empty()) return e;
  const double n = static_cast<double>(values.size());
  e.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - e.mean) * (v - e.mean);
  e.std = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  e.values = std::move(values);
  const double half = 1.959963984540054 * e.se();
  e.ci_lo = e.mean - half;
  e.ci_hi = e.mean + half;
  return e;
}

MCEstimate mc_error(const ConditionalSampler& sampler, const Dataset& data, std::uint64_t draws,
                    int resamples, std::uint64_t seed, const SampleOptions& options) {
  require(resamples >= 2, ErrorKind::precondition, "need at least two resamples");
  const Network& net = sampler.network();
  const Matrix truth = net.forward_batch(data.inputs);
  const double n = static_cast<double>(data.size());

  std::vector<double> errors;
  errors.reserve(static_cast<std::size_t>(resamples));
  for (int r = 0; r < resamples; ++r) {
    SampleOptions opts = options;
    opts.stream_offset = options.stream_offset + static_cast<std::uint64_t>(r) * options.streams;
    const ReconstructedNetwork rec = compress(sampler, draws, seed, opts);
    errors.push_back((rec.evaluate_batch(data.inputs) - truth).squaredNorm() / n);
  }
  return summarize(std::move(errors));
}

MCEstimate mc_error(const Network& net, const Dataset& data, double q, std::uint64_t draws,
                    int resamples, std::uint64_t seed, const SampleOptions& options) {
  require(q >= 1.0 && q <= 2.0, ErrorKind::precondition, "mc_error needs 1 <= q <= 2");
  return mc_error(build_sampler(net, data, q), data, draws, resamples, seed, options);
}

double error_upper_bound(double variation, double zeta, std::size_t depth, std::uint64_t draws) {
  require(variation >= 0.0 && zeta >= 0.0 && depth >= 1 && draws >= 1, ErrorKind::precondition,
          "error_upper_bound needs nonnegative V, zeta and positive L, M");
  const double root = variation * zeta * static_cast<double>(depth) /
                      std::sqrt(static_cast<double>(draws));
  return root * root;
}

LowerBoundInstance lower_bound_instance(std::size_t d, std::size_t d1) {
  require(d >= 2 && d % 2 == 0, ErrorKind::precondition, "lower-bound instance needs even d >= 2");
  require(d1 >= 1, ErrorKind::precondition, "lower-bound instance needs d1 >= 1");
  const auto rows = static_cast<Eigen::Index>(d1);
  const auto cols = static_cast<Eigen::Index>(d);
  Network net({Matrix::Ones(rows, cols), Matrix::Ones(1, rows)}, Activation::relu());
  Vector x(cols);
  for (Eigen::Index j = 0; j < cols; ++j) x[j] = j % 2 == 0 ? 1.0 : -1.0;
  const Vector p = marginal(net, unit_weights(d), 1, MarginalMode::collapsed);
  const double xi1 = 0.5 * (1.0 + renyi_half_exp(p));
  return {std::move(net), std::move(x), xi1};
}

double lower_bound_rhs(double xi1, std::uint64_t draws) {
  require(draws >= 1, ErrorKind::precondition, "lower_bound_rhs needs M >= 1");
  return xi1 * xi1 / (32.0 * static_cast<double>(draws));
}

// ---------------------------------------------------------------------------
// Markov models

double MarkovModel::probability(std::size_t m, std::uint32_t source, std::uint32_t target) const {
  const auto& layer = layers.at(m - 1);
  const auto it = layer.find({target, source});
  return it == layer.end() ? 0.0 : it->second;
}

double MarkovModel::log_probability(const std::vector<std::uint32_t>& path) const {
  const std::size_t depth = layers.size();
  require(path.size() == depth + 1, ErrorKind::dimension, "path length must be L + 1");
  double total = 0.0;
  for (std::size_t m = 1; m <= depth; ++m) {
    const double p = probability(m, path[m - 1], path[m]);
    if (p <= 0.0) return -std::numeric_limits<double>::infinity();
    total += std::log(p);
  }
  return total;
}

MarkovModel to_model(const EmpiricalMarkov& em) {
  MarkovModel model;
  model.dims = em.dims();
  model.layers.resize(em.depth());
  for (std::size_t m = 1; m <= em.depth(); ++m) {
    for (const auto& e : em.edges(m)) {
      model.layers[m - 1][{e.target, e.source}] = em.probability(m, e.source, e.target).value();
    }
  }
  return model;
}

namespace {

using Row = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

void dirichlet_fill(const Row& keys, Philox4x64& rng,
                    std::map<std::pair<std::uint32_t, std::uint32_t>, double>& out) {
  std::vector<double> g(keys.size());
  double total = 0.0;
  for (auto& v : g) {
    v = -std::log1p(-rng.uniform());
    total += v;
  }
  for (std::size_t i = 0; i < keys.size(); ++i) out[keys[i]] += g[i] / total;
}

}  // namespace

MarkovModel random_candidate(const MarkovModel& model, Philox4x64& rng) {
  MarkovModel out;
  out.dims = model.dims;
  out.layers.resize(model.layers.size());
  const std::size_t depth = model.layers.size();
  for (std::size_t m = 1; m <= depth; ++m) {
    const auto source_width = static_cast<std::uint64_t>(2 * model.dims[m - 1]);
    const auto& layer = model.layers[m - 1];
    if (m == depth) {
      Row keys;
      for (const auto& [key, p] : layer) keys.push_back(key);
      const auto target = static_cast<std::uint32_t>(rng.below(model.dims[m]));
      keys.emplace_back(target, static_cast<std::uint32_t>(rng.below(source_width)));
      dirichlet_fill(keys, rng, out.layers[m - 1]);
      continue;
    }
    for (auto it = layer.begin(); it != layer.end();) {
      const std::uint32_t target = it->first.first;
      Row keys;
      for (; it != layer.end() && it->first.first == target; ++it) keys.push_back(it->first);
      keys.emplace_back(target, static_cast<std::uint32_t>(rng.below(source_width)));
      dirichlet_fill(keys, rng, out.layers[m - 1]);
    }
  }
  return out;
}

double log_likelihood(const PathCounts& counts, const MarkovModel& model) {
  require(counts.paths.has_value(), ErrorKind::precondition,
          "log-likelihood needs the path multiset (sample with keep_paths)");
  double total = std::lgamma(static_cast<double>(counts.draws) + 1.0);
  for (const auto& [path, k] : *counts.paths) {
    const double lp = model.log_probability(path);
    if (!std::isfinite(lp)) return -std::numeric_limits<double>::infinity();
    const auto kd = static_cast<double>(k);
    total += kd * lp - std::lgamma(kd + 1.0);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Cardinality

std::uint64_t partition_count(unsigned k) {
  std::vector<std::uint64_t> p(k + 1, 0);
  p[0] = 1;
  for (unsigned part = 1; part <= k; ++part) {
    for (unsigned s = part; s <= k; ++s) p[s] += p[s - part];
  }
  return p[k];
}

namespace {

std::uint64_t enumerate_partitions(unsigned remaining, unsigned largest,
                                   std::vector<unsigned>& parts) {
  if (remaining == 0) return 1;
  std::uint64_t total = 0;
  for (unsigned next = std::min(remaining, largest); next >= 1; --next) {
    parts.push_back(next);
    total += enumerate_partitions(remaining - next, next, parts);
    parts.pop_back();
  }
  return total;
}

}  // namespace

std::uint64_t partition_count_exhaustive(unsigned k) {
  std::vector<unsigned> parts;
  return enumerate_partitions(k, k, parts);
}

Matrix default_probes(std::size_t d, std::size_t count) {
  Philox4x64 rng(0x5EED5EEDULL, 0x9B0BE5ULL);
  Matrix probes(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < probes.rows(); ++i) {
    for (Eigen::Index j = 0; j < probes.cols(); ++j) probes(i, j) = rng.normal();
    probes.row(i) /= probes.row(i).norm();
  }
  return probes;
}

std::uint64_t count_realized(const Network& net, const Dataset& data, double q,
                             std::uint64_t draws, const Matrix& probes) {
  require(draws >= 1, ErrorKind::precondition, "count_realized needs M >= 1");
  require(probes.rows() >= 16, ErrorKind::precondition, "count_realized needs at least 16 probes");
  require(static_cast<std::size_t>(probes.cols()) == net.input_dim(), ErrorKind::dimension,
          "probe dimension does not match network input");
  require(net.path_count() <= 1e4, ErrorKind::guard, "too many paths to enumerate");
  const InputWeighting weighting = input_weights(data, q);
  const PathEnumeration all = enumerate_paths_oracle(net, weighting, 1e4);

  std::vector<std::vector<std::uint32_t>> paths;
  for (std::size_t i = 0; i < all.paths.size(); ++i) {
    if (all.weights[i] > 0.0) paths.push_back(all.paths[i]);
  }
  require(!paths.empty(), ErrorKind::degenerate, "path variation is zero");
  const double multisets =
      std::exp(std::lgamma(static_cast<double>(paths.size() + draws)) -
               std::lgamma(static_cast<double>(draws) + 1.0) -
               std::lgamma(static_cast<double>(paths.size())));
  require(multisets <= 1e6 * (1.0 + 1e-9), ErrorKind::guard, "too many samples to enumerate");

  const LogScaled unit = LogScaled::from_double(1.0);
  std::vector<Vector> distinct;
  std::vector<std::size_t> pick(draws, 0);
  while (true) {
    PathCounts counts = empty_counts(net);
    for (std::size_t i : pick) record_path(net, paths[i], counts);
    const ReconstructedNetwork rec =
        reconstruct(EmpiricalMarkov(counts), unit, weighting, net.activation());
    const Matrix values = rec.normalized.forward_batch(probes);
    const Vector print = Eigen::Map<const Vector>(values.data(), values.size());
    const bool seen = std::any_of(distinct.begin(), distinct.end(), [&](const Vector& v) {
      return (v - print).cwiseAbs().maxCoeff() <= 1e-9;
    });
    if (!seen) distinct.push_back(print);

    // Next nondecreasing index sequence.
    std::size_t pos = draws;
    while (pos > 0 && pick[pos - 1] + 1 == paths.size()) --pos;
    if (pos == 0) break;
    const std::size_t next = pick[pos - 1] + 1;
    for (std::size_t i = pos - 1; i < draws; ++i) pick[i] = next;
  }
  return distinct.size();
}

double cardinality_log_bound(std::uint64_t draws, std::size_t depth, std::size_t dim) {
  require(draws >= 1 && depth >= 1 && dim >= 1, ErrorKind::precondition,
          "cardinality bound needs positive M, L, d");
  return static_cast<double>(draws) *
         (std::log(static_cast<double>(dim)) + 1.0 + static_cast<double>(depth) * std::log(8.0));
}

CoveringSize covering_size(double variation, double zeta, std::size_t depth, double gamma,
                           double eps, std::size_t dim) {
  require(variation > 0.0 && zeta > 0.0 && depth >= 1 && gamma > 0.0 && eps > 0.0 && dim >= 1,
          ErrorKind::precondition, "covering size needs positive arguments");
  const double l = static_cast<double>(depth);
  const double root = 2.0 * variation * zeta * l / (gamma * eps);
  CoveringSize out;
  out.draws = static_cast<std::uint64_t>(std::ceil(root * root));
  out.log_n = cardinality_log_bound(out.draws, depth, dim);
  out.closed_form = 9.0 * variation * variation * zeta * zeta * l * l *
                    (l + std::log(static_cast<double>(dim)) + 1.0) / (gamma * gamma * eps * eps);
  return out;
}

ProjectionResult effective_projection(const Network& net, const Dataset& data) {
  require(data.dim() == net.input_dim(), ErrorKind::dimension,
          "dataset dimension does not match network input");
  const Eigen::MatrixXd x = data.inputs;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
  const auto rank = static_cast<Eigen::Index>(svd.rank());
  const Eigen::MatrixXd basis = svd.matrixV().leftCols(rank);
  const Matrix projector = basis * basis.transpose();

  std::vector<Matrix> layers = net.layers();
  layers.front() = (layers.front() * projector).eval();
  return {Network(std::move(layers), net.activation()), static_cast<std::size_t>(rank)};
}

}  // namespace pathsample
