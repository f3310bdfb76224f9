#include "pathsample/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pathsample/error.hpp"
#include "pathsample/measures.hpp"
#include "pathsample/sampler.hpp"
#include "pathsample/theory.hpp"

namespace pathsample {

bool SuiteReport::passed() const { return failures() == 0; }

std::size_t SuiteReport::failures() const {
  return static_cast<std::size_t>(
      std::count_if(checks.begin(), checks.end(), [](const CheckResult& c) { return !c.passed; }));
}

Network random_network(const std::vector<std::size_t>& dims, Philox4x64& rng,
                       Activation activation) {
  std::vector<Matrix> layers;
  for (std::size_t l = 1; l < dims.size(); ++l) {
    Matrix w(static_cast<Eigen::Index>(dims[l]), static_cast<Eigen::Index>(dims[l - 1]));
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal();
    layers.push_back(std::move(w));
  }
  return {std::move(layers), activation};
}

Dataset random_dataset(std::size_t n, std::size_t d, Philox4x64& rng) {
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  return Dataset(std::move(x));
}

Network reference_network() {
  Matrix w1(2, 2);
  w1 << 1, -2, -3, 4;
  Matrix w2(1, 2);
  w2 << 1, 1;
  return {{w1, w2}, Activation::relu()};
}

Dataset reference_dataset() {
  Matrix x(3, 2);
  x << 1, 0, 0, -1, -1, 1;
  return Dataset(std::move(x));
}

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::size_t between(Philox4x64& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

std::string dims_text(const Network& net) {
  std::ostringstream s;
  for (std::size_t l = 0; l < net.dims().size(); ++l) s << (l ? "-" : "") << net.dims()[l];
  return s.str();
}

}  // namespace

SuiteReport verify_upper_bound(const VerifyOptions& options) {
  SuiteReport report{"upperbound", {}};
  Philox4x64 rng(options.seed, 3);
  for (int i = 0; i < options.networks; ++i) {
    const std::size_t depth = 2 + static_cast<std::size_t>(i % 3);
    std::vector<std::size_t> dims{between(rng, 2, 8)};
    for (std::size_t l = 1; l < depth; ++l) dims.push_back(between(rng, 1, 16));
    dims.push_back(between(rng, 1, 4));
    const Network net = random_network(dims, rng);
    const Dataset data = random_dataset(16, dims.front(), rng);
    for (double q : {1.0, 2.0}) {
      const ConditionalSampler sampler = build_sampler(net, data, q);
      const double v = sampler.variation().to_double();
      const double zeta = path_complexity(net, sampler.weighting(), MarginalMode::doubled);
      for (std::uint64_t m : {100ULL, 1000ULL}) {
        const std::uint64_t seed = mix(options.seed, report.checks.size());
        const MCEstimate est = mc_error(sampler, data, m, options.resamples, seed);
        CheckResult c;
        c.name = "net" + std::to_string(i) + "/q" + std::to_string(static_cast<int>(q)) + "/M" +
                 std::to_string(m);
        c.observed = est.mean + 3.0 * est.se();
        c.bound = error_upper_bound(v, zeta, depth, m);
        c.passed = c.observed <= c.bound;
        c.seed = seed;
        c.details = "dims " + dims_text(net) + ", mean " + std::to_string(est.mean) + ", se " +
                    std::to_string(est.se());
        report.checks.push_back(std::move(c));
      }
    }
  }
  return report;
}

SuiteReport verify_lower_bound(const VerifyOptions& options) {
  SuiteReport report{"lowerbound", {}};
  const LowerBoundInstance inst = lower_bound_instance(8, 8);
  const Dataset data(Matrix(inst.x.transpose()));
  const ConditionalSampler sampler = build_sampler(inst.net, data, 1.0);
  const double v2 = std::pow(sampler.variation().to_double(), 2.0);

  const auto normalized = [&](std::uint64_t m, int resamples, std::uint64_t seed) {
    MCEstimate est = mc_error(sampler, data, m, resamples, seed);
    for (double& e : est.values) e /= v2;
    return summarize(std::move(est.values));
  };

  {
    CheckResult c;
    c.name = "f(x;p)=0";
    c.observed = inst.net.forward(inst.x)[0];
    c.bound = 0.0;
    c.passed = c.observed == 0.0;
    report.checks.push_back(c);
  }
  for (std::uint64_t m : {1000ULL, 10000ULL}) {
    const std::uint64_t seed = mix(options.seed, m);
    const MCEstimate est = normalized(m, options.lower_resamples, seed);
    CheckResult c;
    c.name = "M" + std::to_string(m);
    c.observed = est.mean - 3.0 * est.se();
    c.bound = lower_bound_rhs(inst.xi1, m);
    c.passed = c.observed >= c.bound;
    c.seed = seed;
    c.details = "normalized error mean " + std::to_string(est.mean) + ", xi1 " +
                std::to_string(inst.xi1);
    report.checks.push_back(std::move(c));
  }

  // Least-squares slope of log RMS error against log M.
  std::vector<double> xs, ys;
  const std::uint64_t seed = mix(options.seed, 0xA7E);
  for (std::uint64_t m : {100ULL, 1000ULL, 10000ULL, 100000ULL}) {
    const MCEstimate est = normalized(m, options.rate_resamples, seed);
    xs.push_back(std::log(static_cast<double>(m)));
    ys.push_back(0.5 * std::log(est.mean));
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i] / n;
    my += ys[i] / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  CheckResult c;
  c.name = "rate";
  c.observed = sxy / sxx;
  c.bound = -0.5;
  c.passed = c.observed >= -0.65 && c.observed <= -0.35;
  c.seed = seed;
  c.details = "slope must lie in [-0.65, -0.35]";
  report.checks.push_back(std::move(c));
  return report;
}

SuiteReport verify_mle(const VerifyOptions& options) {
  SuiteReport report{"mle", {}};
  Philox4x64 rng(options.seed, 5);
  for (int t = 0; t < options.mle_trials; ++t) {
    const std::size_t depth = 2 + static_cast<std::size_t>(t % 2);
    std::vector<std::size_t> dims{between(rng, 1, 5)};
    for (std::size_t l = 1; l < depth; ++l) dims.push_back(between(rng, 1, 6));
    dims.push_back(between(rng, 1, 3));
    const Network net = random_network(dims, rng);
    const Dataset data = random_dataset(8, dims.front(), rng);
    const std::uint64_t m = between(rng, 1, 50);
    const std::uint64_t seed = mix(options.seed, static_cast<std::uint64_t>(t));

    SampleOptions opts;
    opts.keep_paths = true;
    const PathCounts counts = sample_paths(build_sampler(net, data, 1.0), m, seed, opts);
    const MarkovModel fitted = to_model(EmpiricalMarkov(counts));
    const double best = log_likelihood(counts, fitted);
    Philox4x64 cand_rng(seed, 1);
    double worst_gap = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < options.mle_candidates; ++k) {
      const double ll = log_likelihood(counts, random_candidate(fitted, cand_rng));
      worst_gap = std::max(worst_gap, ll - best);
    }
    CheckResult c;
    c.name = "trial" + std::to_string(t);
    c.observed = worst_gap;
    c.bound = 1e-9 * std::max(1.0, std::abs(best));
    c.passed = std::isfinite(best) && worst_gap <= c.bound;
    c.seed = seed;
    c.details = "dims " + dims_text(net) + ", M " + std::to_string(m) + ", log-likelihood " +
                std::to_string(best);
    report.checks.push_back(std::move(c));
  }
  return report;
}

SuiteReport verify_cardinality(const VerifyOptions& options) {
  SuiteReport report{"cardinality", {}};
  Philox4x64 rng(options.seed, 6);
  const Matrix probes = default_probes(2);
  std::vector<Network> nets{reference_network()};
  for (int i = 0; i < options.cardinality_networks; ++i) nets.push_back(random_network({2, 2, 1}, rng));
  const Dataset data = reference_dataset();
  for (std::size_t i = 0; i < nets.size(); ++i) {
    for (std::uint64_t m : {1ULL, 2ULL, 3ULL}) {
      const std::uint64_t count = count_realized(nets[i], data, 1.0, m, probes);
      CheckResult c;
      c.name = (i == 0 ? std::string("reference") : "net" + std::to_string(i)) + "/M" +
               std::to_string(m);
      c.observed = static_cast<double>(count);
      c.bound = std::exp(cardinality_log_bound(m, nets[i].depth(), nets[i].input_dim()));
      c.passed = c.observed <= c.bound;
      report.checks.push_back(std::move(c));
    }
  }
  for (unsigned k = 0; k <= options.partition_max; ++k) {
    const std::uint64_t fast = partition_count(k);
    const std::uint64_t slow = partition_count_exhaustive(k);
    CheckResult c;
    c.name = "partitions/" + std::to_string(k);
    c.observed = static_cast<double>(slow);
    c.bound = std::ldexp(1.0, static_cast<int>(k));
    c.passed = fast == slow && c.observed <= c.bound;
    report.checks.push_back(std::move(c));
  }
  return report;
}

SuiteReport verify_variation_bounds(const VerifyOptions& options) {
  SuiteReport report{"variation", {}};
  Philox4x64 rng(options.seed, 2);
  for (int i = 0; i < options.variation_networks; ++i) {
    const std::size_t depth = 2 + static_cast<std::size_t>(rng.below(3));
    std::vector<std::size_t> dims{between(rng, 1, 6)};
    for (std::size_t l = 1; l <= depth; ++l) dims.push_back(between(rng, 1, 6));
    const Network net = random_network(dims, rng);
    const Dataset data = random_dataset(between(rng, 1, 10), dims.front(), rng);
    for (double q : {1.0, 2.0}) {
      const double v = variation(net, data, q).to_double();
      const auto [first, second] = variation_bounds(net, data, q);
      CheckResult c;
      c.name = "net" + std::to_string(i) + "/q" + std::to_string(static_cast<int>(q));
      c.observed = v;
      c.bound = std::min(first, second);
      c.passed = v <= c.bound * (1.0 + 1e-12);
      c.details = "dims " + dims_text(net);
      report.checks.push_back(std::move(c));
    }
  }
  return report;
}

std::vector<SuiteReport> run_suites(const std::string& name, const VerifyOptions& options) {
  std::vector<SuiteReport> out;
  const bool all = name == "all";
  if (all || name == "upperbound") out.push_back(verify_upper_bound(options));
  if (all || name == "lowerbound") out.push_back(verify_lower_bound(options));
  if (all || name == "mle") out.push_back(verify_mle(options));
  if (all || name == "cardinality") out.push_back(verify_cardinality(options));
  if (all || name == "variation") out.push_back(verify_variation_bounds(options));
  require(!out.empty(), ErrorKind::precondition, "unknown suite " + name);
  return out;
}

}  // namespace pathsample
