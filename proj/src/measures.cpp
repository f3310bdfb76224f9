#include "pathsample/measures.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "pathsample/error.hpp"
#include "pathsample/rng.hpp"

namespace pathsample {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double conjugate(double q) {
  if (q == 1.0) return kInf;
  if (std::isinf(q)) return 1.0;
  return q / (q - 1.0);
}

double vector_norm(const Eigen::Ref<const Vector>& v, double q) {
  if (std::isinf(q)) return v.cwiseAbs().maxCoeff();
  if (q == 1.0) return v.cwiseAbs().sum();
  if (q == 2.0) return v.norm();
  return std::pow(v.cwiseAbs().array().pow(q).sum(), 1.0 / q);
}

Matrix abs_of(const Matrix& w) { return w.cwiseAbs(); }

void check_hidden_layer(const Network& net, std::size_t layer) {
  require(layer >= 1 && layer + 1 <= net.depth(), ErrorKind::precondition,
          "marginal layer must lie in [1, L-1], got " + std::to_string(layer));
}

}  // namespace

InputWeighting input_weights(const Dataset& data, double q) {
  require(q >= 1.0, ErrorKind::precondition, "q must lie in [1, inf]");
  InputWeighting out;
  out.q = q;
  const Matrix& x = data.inputs;
  out.weights.resize(x.cols());
  const double qs = conjugate(q);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const auto column = x.col(j).cwiseAbs();
    if (std::isinf(qs)) {
      out.weights[j] = column.maxCoeff();
    } else if (qs == 1.0) {
      out.weights[j] = column.mean();
    } else if (qs == 2.0) {
      out.weights[j] = std::sqrt(column.array().square().mean());
    } else {
      out.weights[j] = std::pow(column.array().pow(qs).mean(), 1.0 / qs);
    }
  }
  return out;
}

InputWeighting unit_weights(std::size_t dim) {
  return {1.0, Vector::Ones(static_cast<Eigen::Index>(dim))};
}

PathChain build_chain(const Network& net, const InputWeighting& weighting) {
  require(static_cast<std::size_t>(weighting.weights.size()) == net.input_dim(),
          ErrorKind::dimension, "input weighting dimension does not match network input");
  require((weighting.weights.array() >= 0.0).all() && weighting.weights.allFinite(),
          ErrorKind::precondition, "input weights must be finite and nonnegative");
  const std::size_t depth = net.depth();
  PathChain chain;
  chain.prefix.resize(depth + 1);
  chain.suffix.resize(depth + 1);

  chain.prefix[0].values = weighting.weights;
  chain.prefix[0].normalize();
  for (std::size_t l = 1; l <= depth; ++l) {
    ScaledVector next;
    next.values = abs_of(net.layer(l - 1)) * chain.prefix[l - 1].values;
    next.exponent = chain.prefix[l - 1].exponent;
    next.normalize();
    chain.prefix[l] = std::move(next);
  }

  chain.suffix[depth].values = Vector::Ones(static_cast<Eigen::Index>(net.output_dim()));
  for (std::size_t l = depth; l-- > 0;) {
    ScaledVector next;
    next.values = abs_of(net.layer(l)).transpose() * chain.suffix[l + 1].values;
    next.exponent = chain.suffix[l + 1].exponent;
    next.normalize();
    chain.suffix[l] = std::move(next);
  }

  chain.variation = chain.prefix[depth].sum();
  chain.degenerate = chain.variation.is_zero();
  return chain;
}

LogScaled variation(const Network& net, const Dataset& data, double q) {
  return build_chain(net, input_weights(data, q)).variation;
}

Vector marginal(const Network& net, const PathChain& chain, std::size_t layer, MarginalMode mode) {
  check_hidden_layer(net, layer);
  require(!chain.degenerate, ErrorKind::degenerate, "path variation is zero");
  const Vector& a = chain.prefix[layer].values;
  Vector mass;
  if (mode == MarginalMode::collapsed) {
    mass = a.cwiseProduct(chain.suffix[layer].values);
  } else {
    const Matrix& w = net.layer(layer);  // W_{layer+1}: d_{layer+1} x d_layer
    const Vector& b = chain.suffix[layer + 1].values;
    const Eigen::Index d = w.cols();
    mass = Vector::Zero(2 * d);
    for (Eigen::Index target = 0; target < w.rows(); ++target) {
      for (Eigen::Index j = 0; j < d; ++j) {
        const double weight = w(target, j);
        const Eigen::Index slot = edge_sign(weight) > 0 ? j : d + j;
        mass[slot] += std::abs(weight) * b[target];
      }
    }
    for (Eigen::Index j = 0; j < d; ++j) {
      mass[j] *= a[j];
      mass[d + j] *= a[j];
    }
  }
  const double total = mass.sum();
  require(total > 0.0, ErrorKind::degenerate, "marginal has no mass");
  return mass / total;
}

Vector marginal(const Network& net, const InputWeighting& weighting, std::size_t layer,
                MarginalMode mode) {
  return marginal(net, build_chain(net, weighting), layer, mode);
}

double renyi_half_exp(const Vector& p) { return p.cwiseMax(0.0).cwiseSqrt().sum(); }

PathMeasures path_measures(const Network& net, const InputWeighting& weighting, MarginalMode mode) {
  const PathChain chain = build_chain(net, weighting);
  require(!chain.degenerate, ErrorKind::degenerate, "path variation is zero");
  PathMeasures out;
  out.variation = chain.variation;
  out.mode = mode;
  double sum = 1.0;
  for (std::size_t l = 1; l < net.depth(); ++l) {
    out.marginals.push_back(marginal(net, chain, l, mode));
    sum += renyi_half_exp(out.marginals.back());
  }
  out.complexity = sum / static_cast<double>(net.depth());
  return out;
}

double path_complexity(const Network& net, const InputWeighting& weighting, MarginalMode mode) {
  return path_measures(net, weighting, mode).complexity;
}

double path_complexity(const Network& net, const Dataset& data, double q, MarginalMode mode) {
  return path_complexity(net, input_weights(data, q), mode);
}

ScaledMatrix product_abs_scaled(const Network& net) {
  ScaledMatrix product;
  product.values = abs_of(net.layer(0));
  product.normalize();
  for (std::size_t l = 1; l < net.depth(); ++l) {
    product.values = abs_of(net.layer(l)) * product.values;
    product.normalize();
  }
  return product;
}

Matrix product_abs(const Network& net) { return product_abs_scaled(net).render(); }

SpectralEstimate spectral_norm(const Matrix& a, double tolerance, int max_iterations) {
  SpectralEstimate out;
  if (a.size() == 0 || a.cwiseAbs().maxCoeff() == 0.0) return out;
  require(a.allFinite(), ErrorKind::non_finite, "matrix has non-finite entries");

  // Rescale so the Gram matrix cannot overflow.
  const double scale = a.cwiseAbs().maxCoeff();
  const Matrix s = a / scale;
  const Matrix gram = s.cols() <= s.rows() ? Matrix(s.transpose() * s) : Matrix(s * s.transpose());

  Philox4x64 rng(0x5EED5EEDULL, 0);
  Vector v(gram.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
  v.normalize();

  double lambda = 0.0;
  out.converged = false;
  for (int it = 1; it <= max_iterations; ++it) {
    Vector w = gram * v;
    const double next = v.dot(w);
    const double norm = w.norm();
    out.iterations = it;
    if (norm == 0.0) {
      lambda = 0.0;
      out.converged = true;
      break;
    }
    v = w / norm;
    if (std::abs(next - lambda) <= tolerance * std::abs(next)) {
      lambda = next;
      out.converged = true;
      break;
    }
    lambda = next;
  }
  lambda = v.dot(gram * v);
  if (lambda > 0.0) out.residual = (gram * v - lambda * v).norm() / lambda;
  out.value = scale * std::sqrt(std::max(lambda, 0.0));
  return out;
}

double induced_norm(const Matrix& a, double q) {
  if (a.size() == 0) return 0.0;
  if (q == 1.0) return a.cwiseAbs().colwise().sum().maxCoeff();
  if (std::isinf(q)) return a.cwiseAbs().rowwise().sum().maxCoeff();
  require(q == 2.0, ErrorKind::precondition, "induced norms are implemented for q in {1, 2, inf}");
  const SpectralEstimate est = spectral_norm(a);
  require(est.converged, ErrorKind::numeric,
          "power iteration did not converge (residual " + std::to_string(est.residual) + ")");
  return est.value;
}

double group_norm_q1(const Matrix& a, double q, GroupOrientation orientation) {
  require(q >= 1.0, ErrorKind::precondition, "group norm needs q >= 1");
  double total = 0.0;
  if (orientation == GroupOrientation::rows) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) total += vector_norm(a.row(i).transpose(), q);
  } else {
    for (Eigen::Index j = 0; j < a.cols(); ++j) total += vector_norm(a.col(j), q);
  }
  return total;
}

std::pair<double, double> variation_bounds(const Network& net, const Dataset& data, double q) {
  require(q == 1.0 || q == 2.0, ErrorKind::precondition, "variation bounds support q in {1, 2}");
  require(data.dim() == net.input_dim(), ErrorKind::dimension,
          "dataset dimension does not match network input");
  const double qs = conjugate(q);
  double radius = 0.0;
  for (Eigen::Index i = 0; i < data.inputs.rows(); ++i) {
    radius = std::max(radius, vector_norm(data.inputs.row(i).transpose(), qs));
  }
  const ScaledMatrix product = product_abs_scaled(net);
  const double unit = std::ldexp(1.0, static_cast<int>(product.exponent));
  const double k = static_cast<double>(net.output_dim());
  const double output_factor = std::isinf(qs) ? k : std::pow(k, 1.0 - 1.0 / qs);
  const double induced = induced_norm(product.values, qs) * unit;
  const double grouped = group_norm_q1(product.values, q, GroupOrientation::rows) * unit;
  return {radius * output_factor * induced, radius * grouped};
}

PathNorm path_norm_phi(const Network& net, double p) {
  require(p >= 1.0, ErrorKind::precondition, "path norm needs p >= 1");
  ScaledVector mass;
  mass.values = Vector::Ones(static_cast<Eigen::Index>(net.input_dim()));
  for (std::size_t l = 0; l < net.depth(); ++l) {
    const Matrix powered = p == 1.0 ? abs_of(net.layer(l))
                                    : Matrix(net.layer(l).cwiseAbs().array().pow(p).matrix());
    ScaledVector next;
    next.values = powered * mass.values;
    next.exponent = mass.exponent;
    next.normalize();
    mass = std::move(next);
  }
  PathNorm out;
  for (Eigen::Index j = 0; j < mass.values.size(); ++j) {
    out.per_output.push_back(mass.at(j).pow(1.0 / p));
    out.total += out.per_output.back();
  }
  return out;
}

PathEnumeration enumerate_paths_oracle(const Network& net, const InputWeighting& weighting,
                                       double max_paths) {
  require(net.path_count() <= max_paths, ErrorKind::guard,
          "path enumeration guard exceeded: " + std::to_string(net.path_count()) + " paths");
  require(static_cast<std::size_t>(weighting.weights.size()) == net.input_dim(),
          ErrorKind::dimension, "input weighting dimension does not match network input");
  const auto& dims = net.dims();
  const std::size_t depth = net.depth();
  PathEnumeration out;
  for (std::size_t d : dims) out.marginals.push_back(Vector::Zero(static_cast<Eigen::Index>(d)));

  std::vector<std::uint32_t> index(depth + 1, 0);
  while (true) {
    double w = weighting.weights[index[0]];
    for (std::size_t l = 1; l <= depth; ++l) {
      w *= std::abs(net.layer(l - 1)(index[l], index[l - 1]));
    }
    out.paths.push_back(index);
    out.weights.push_back(w);
    out.variation += w;
    for (std::size_t l = 0; l <= depth; ++l) out.marginals[l][index[l]] += w;

    std::size_t pos = 0;
    while (pos <= depth && ++index[pos] == dims[pos]) index[pos++] = 0;
    if (pos > depth) break;
  }
  if (out.variation > 0.0) {
    for (auto& m : out.marginals) m /= out.variation;
  }
  return out;
}

}  // namespace pathsample
