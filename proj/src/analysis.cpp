#include "pathsample/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "pathsample/error.hpp"
#include "pathsample/measures.hpp"
#include "pathsample/theory.hpp"

namespace pathsample {

double margin(const Vector& v, int y) {
  require(v.size() >= 2, ErrorKind::precondition, "margin needs at least two classes");
  require(y >= 0 && y < v.size(), ErrorKind::precondition, "label out of range");
  double other = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (j != y) other = std::max(other, v[j]);
  }
  return v[y] - other;
}

double ramp(double gamma, double z) {
  require(gamma > 0.0, ErrorKind::precondition, "ramp needs gamma > 0");
  if (z < -gamma) return 0.0;
  if (z > 0.0) return 1.0;
  return 1.0 + z / gamma;
}

Losses losses(const std::vector<double>& margins, double gamma) {
  require(gamma > 0.0, ErrorKind::precondition, "margin loss needs gamma > 0");
  require(!margins.empty(), ErrorKind::precondition, "no margins");
  Losses out;
  for (double m : margins) {
    out.zero_one += m <= 0.0 ? 1.0 : 0.0;
    out.margin_loss += m <= gamma ? 1.0 : 0.0;
    out.ramp_mean += ramp(gamma, -m);
  }
  const auto n = static_cast<double>(margins.size());
  out.zero_one /= n;
  out.margin_loss /= n;
  out.ramp_mean /= n;
  return out;
}

std::vector<double> margins(const Network& net, const Dataset& data) {
  require(data.has_labels(), ErrorKind::precondition, "margins need labels");
  require(net.output_dim() >= 2, ErrorKind::precondition, "margin needs at least two classes");
  data.check_labels(net.output_dim());
  const Matrix out = net.forward_batch(data.inputs);
  std::vector<double> result(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    result[i] = margin(out.row(static_cast<Eigen::Index>(i)).transpose(), (*data.labels)[i]);
  }
  return result;
}

Losses losses(const Network& net, const Dataset& data, double gamma) {
  return losses(margins(net, data), gamma);
}

double default_gamma(const std::vector<double>& margins) {
  std::vector<double> positive;
  for (double m : margins) {
    if (m > 0.0) positive.push_back(m);
  }
  require(!positive.empty(), ErrorKind::degenerate, "no positive margins to pick gamma from");
  std::sort(positive.begin(), positive.end());
  const std::size_t n = positive.size();
  return n % 2 == 1 ? positive[n / 2] : 0.5 * (positive[n / 2 - 1] + positive[n / 2]);
}

MarginStats normalized_margins(const Network& net, const Dataset& data, std::size_t bins) {
  require(bins >= 1, ErrorKind::precondition, "histogram needs at least one bin");
  MarginStats s;
  s.raw = margins(net, data);
  s.variation = variation(net, data, 1.0);
  require(!s.variation.is_zero(), ErrorKind::degenerate, "path variation is zero");
  s.normalized.reserve(s.raw.size());
  for (double m : s.raw) {
    const LogScaled mag = LogScaled::from_double(std::abs(m)) / s.variation;
    s.normalized.push_back(std::copysign(mag.to_double(), m));
  }
  const auto [lo, hi] = std::minmax_element(s.normalized.begin(), s.normalized.end());
  s.lo = *lo;
  s.hi = *hi;
  const double width = s.hi > s.lo ? (s.hi - s.lo) / static_cast<double>(bins) : 1.0;
  s.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) s.edges[b] = s.lo + width * static_cast<double>(b);
  s.edges.back() = s.hi > s.lo ? s.hi : s.lo + 1.0;
  s.counts.assign(bins, 0);
  for (double v : s.normalized) {
    auto b = static_cast<std::size_t>((v - s.lo) / width);
    ++s.counts[std::min(b, bins - 1)];
  }
  return s;
}

namespace {

/// Smallest j >= 1 with 2^j >= x.
long dyadic_index(double x) {
  long j = std::max(1L, static_cast<long>(std::ceil(std::log2(x))));
  while (j > 1 && std::ldexp(1.0, static_cast<int>(j - 1)) >= x) --j;
  while (std::ldexp(1.0, static_cast<int>(j)) < x) ++j;
  return j;
}

}  // namespace

BoundResult generalization_bound(const BoundInputs& b, BoundMode mode) {
  require(b.delta > 0.0 && b.delta < 1.0, ErrorKind::precondition, "delta must lie in (0, 1)");
  require(b.gamma > 0.0, ErrorKind::precondition, "gamma must be positive");
  require(b.samples >= 1 && b.depth >= 1 && b.dim >= 1, ErrorKind::precondition,
          "n, L and d must be positive");
  require(b.variation >= 0.0 && b.zeta >= 0.0, ErrorKind::precondition,
          "V and zeta must be nonnegative");
  const double n = static_cast<double>(b.samples);
  const double l = static_cast<double>(b.depth);
  const double width = l * std::sqrt(l + std::log(static_cast<double>(b.dim)) + 1.0) * std::log(n);

  BoundResult r;
  r.mode = mode;
  if (mode == BoundMode::apriori) {
    r.value = b.margin_loss + 8.0 / n +
              48.0 * b.variation * b.zeta * width / (b.gamma * std::sqrt(n)) +
              3.0 * std::sqrt(std::log(2.0 / b.delta) / (2.0 * n));
  } else {
    r.j1 = dyadic_index(std::sqrt(n) / b.gamma);
    r.j2 = std::max(1L, static_cast<long>(std::ceil(b.variation)));
    r.j3 = std::max(1L, static_cast<long>(std::ceil(b.zeta)));
    const double j1 = static_cast<double>(r.j1);
    const double j2 = static_cast<double>(r.j2);
    const double j3 = static_cast<double>(r.j3);
    const double conf = std::log(2.0 / b.delta) + j1 * std::log(2.0) + 2.0 * std::log(j2 + 1.0) +
                        2.0 * std::log(j3 + 1.0);
    r.value = b.margin_loss + 8.0 / n + 48.0 * std::ldexp(1.0, static_cast<int>(r.j1)) * j2 * j3 *
                                            width / n +
              3.0 * std::sqrt(conf / (2.0 * n));
  }
  r.vacuous = r.value > 1.0;
  return r;
}

const Capacity& CapacityReport::at(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return e;
  }
  fail(ErrorKind::precondition, "unknown capacity measure " + name);
}

CapacityReport competing_capacities(const Network& net, const Dataset& data) {
  CapacityReport report;
  auto add = [&](std::string name, LogScaled value) {
    report.entries.push_back({std::move(name), value});
  };
  const InputWeighting w1 = input_weights(data, 1.0);
  const InputWeighting w2 = input_weights(data, 2.0);
  const PathChain c1 = build_chain(net, w1);
  const PathChain c2 = build_chain(net, w2);
  add("V_1", c1.variation);
  add("V_2", c2.variation);
  for (const auto& [name, w] : {std::pair{"zeta_1", &w1}, std::pair{"zeta_2", &w2}}) {
    add(std::string(name) + "_doubled",
        LogScaled::from_double(path_complexity(net, *w, MarginalMode::doubled)));
    add(std::string(name) + "_collapsed",
        LogScaled::from_double(path_complexity(net, *w, MarginalMode::collapsed)));
  }
  const PathNorm phi1 = path_norm_phi(net, 1.0);
  const PathNorm phi2 = path_norm_phi(net, 2.0);
  add("phi_1", phi1.total);
  add("phi_2", phi2.total);

  LogScaled spectral = LogScaled::from_double(1.0);
  LogScaled frobenius = spectral;
  LogScaled row_sum = spectral;
  double width = 0.0;
  for (const Matrix& w : net.layers()) {
    const double sigma = spectral_norm(w).value;
    spectral *= LogScaled::from_double(sigma);
    frobenius *= LogScaled::from_double(w.norm());
    row_sum *= LogScaled::from_double(induced_norm(w, std::numeric_limits<double>::infinity()));
    if (sigma > 0.0) {
      width += std::pow(group_norm_q1(w, 2.0, GroupOrientation::columns) / sigma, 2.0 / 3.0);
    }
  }
  add("prod_spectral", spectral);
  add("prod_frobenius", frobenius);
  add("prod_l1_inf", row_sum);

  const ScaledMatrix product = product_abs_scaled(net);
  const auto scaled_value = [&](double v) {
    return LogScaled::from_double(v) * LogScaled::from_log2(static_cast<double>(product.exponent));
  };
  add("product_abs_spectral", scaled_value(spectral_norm(product.values).value));
  add("product_abs_l1_inf",
      scaled_value(induced_norm(product.values, std::numeric_limits<double>::infinity())));
  add("spectral_width", LogScaled::from_double(width / static_cast<double>(net.depth())));

  report.variation2_over_phi2 =
      phi2.total.is_zero() ? 0.0 : (c2.variation / phi2.total).to_double();
  return report;
}

double accuracy(const Matrix& outputs, const std::vector<int>& labels) {
  require(static_cast<std::size_t>(outputs.rows()) == labels.size(), ErrorKind::dimension,
          "outputs and labels differ in length");
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < outputs.rows(); ++i) {
    Eigen::Index best = 0;
    outputs.row(i).maxCoeff(&best);
    if (best == labels[static_cast<std::size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

std::vector<SweepRow> sweep_accuracy_vs_M(const Network& net, const Dataset& data, double q,
                                          const std::vector<std::uint64_t>& draws, int rounds,
                                          std::uint64_t seed, const SampleOptions& options) {
  require(data.has_labels(), ErrorKind::precondition, "sweep needs labels");
  require(rounds >= 1, ErrorKind::precondition, "sweep needs at least one round");
  data.check_labels(net.output_dim());
  const ConditionalSampler sampler = build_sampler(net, data, q);
  const Matrix truth = net.forward_batch(data.inputs);
  const double n = static_cast<double>(data.size());

  std::vector<SweepRow> rows;
  for (std::uint64_t m : draws) {
    std::vector<double> acc;
    double mse = 0.0;
    for (int r = 0; r < rounds; ++r) {
      SampleOptions opts = options;
      opts.stream_offset = options.stream_offset + static_cast<std::uint64_t>(r) * options.streams;
      const Matrix out = compress(sampler, m, seed, opts).evaluate_batch(data.inputs);
      acc.push_back(accuracy(out, *data.labels));
      mse += (out - truth).squaredNorm() / n;
    }
    const MCEstimate est = summarize(acc);
    SweepRow row;
    row.draws = m;
    row.mean_acc = est.mean;
    row.std_acc = est.std;
    row.min_acc = *std::min_element(acc.begin(), acc.end());
    row.max_acc = *std::max_element(acc.begin(), acc.end());
    row.mse = mse / static_cast<double>(rounds);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace pathsample
