#include <cmath>
#include <limits>

#include <Eigen/SVD>

#include "doctest.h"
#include "fixtures.hpp"
#include "pathsample/error.hpp"
#include "pathsample/measures.hpp"
#include "pathsample/verify.hpp"

using namespace pathsample;
using fixtures::mat;
using fixtures::vec;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double rel(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

}  // namespace

TEST_CASE("input weights") {
  const Dataset s = reference_dataset();
  const InputWeighting w1 = input_weights(s, 1.0);
  CHECK(w1.weights[0] == 1.0);
  CHECK(w1.weights[1] == 1.0);
  const InputWeighting w2 = input_weights(s, 2.0);
  CHECK(w2.weights[0] == doctest::Approx(0.81650).epsilon(1e-5));
  CHECK(w2.weights[1] == doctest::Approx(0.81650).epsilon(1e-5));
  const InputWeighting single = input_weights(Dataset(mat(1, 2, {3, 4})), 2.0);
  CHECK(single.weights[0] == doctest::Approx(3.0));
  CHECK(single.weights[1] == doctest::Approx(4.0));
  CHECK_THROWS_AS(input_weights(s, 0.5), Error);
}

TEST_CASE("reference network chain and variation") {
  const Network net = reference_network();
  const PathChain c = build_chain(net, unit_weights(2));
  const Vector a1 = c.prefix[1].render();
  CHECK(a1[0] == doctest::Approx(3.0));
  CHECK(a1[1] == doctest::Approx(7.0));
  CHECK(c.variation.to_double() == doctest::Approx(10.0));
  CHECK(variation(net, reference_dataset(), 1.0).to_double() == doctest::Approx(10.0));
  CHECK(variation(net, reference_dataset(), 2.0).to_double() ==
        doctest::Approx(8.16497).epsilon(1e-6));
}

TEST_CASE("chain network variation and complexity") {
  const Network net = fixtures::chain_net();
  CHECK(build_chain(net, unit_weights(1)).variation.to_double() == doctest::Approx(6.0));
  CHECK(path_complexity(net, unit_weights(1), MarginalMode::doubled) == doctest::Approx(1.0));
  CHECK(path_norm_phi(net, 3.0).total.to_double() == doctest::Approx(6.0));
}

TEST_CASE("zero network is degenerate") {
  const Network net({Matrix::Zero(2, 2), Matrix::Zero(1, 2)}, Activation::relu());
  const PathChain c = build_chain(net, unit_weights(2));
  CHECK(c.degenerate);
  CHECK_THROWS_AS(marginal(net, c, 1, MarginalMode::collapsed), Error);
  CHECK(product_abs(net).isZero());
  const auto [a, b] = variation_bounds(net, reference_dataset(), 1.0);
  CHECK(a == 0.0);
  CHECK(b == 0.0);
}

TEST_CASE("reference network marginals and complexity") {
  const Network net = reference_network();
  const Vector col = marginal(net, unit_weights(2), 1, MarginalMode::collapsed);
  CHECK(col[0] == doctest::Approx(0.3));
  CHECK(col[1] == doctest::Approx(0.7));
  const Vector dbl = marginal(net, unit_weights(2), 1, MarginalMode::doubled);
  REQUIRE(dbl.size() == 4);
  CHECK(dbl[0] == doctest::Approx(0.3));
  CHECK(dbl[1] == doctest::Approx(0.7));
  CHECK(dbl[2] == 0.0);
  CHECK(dbl[3] == 0.0);
  CHECK(path_complexity(net, reference_dataset(), 1.0, MarginalMode::doubled) ==
        doctest::Approx(1.19219).epsilon(1e-5));
  CHECK_THROWS_AS(marginal(net, unit_weights(2), 0, MarginalMode::collapsed), Error);
  CHECK_THROWS_AS(marginal(net, unit_weights(2), 2, MarginalMode::collapsed), Error);
}

TEST_CASE("renyi half exponent") {
  CHECK(renyi_half_exp(vec({1.0})) == 1.0);
  CHECK(renyi_half_exp(vec({0.5, 0.5})) == doctest::Approx(1.41421).epsilon(1e-5));
  CHECK(renyi_half_exp(vec({0.3, 0.7})) == doctest::Approx(1.38438).epsilon(1e-5));
}

TEST_CASE("uniform two-layer complexity") {
  const Network net({Matrix::Ones(4, 3), Matrix::Ones(1, 4)}, Activation::relu());
  CHECK(path_complexity(net, unit_weights(3), MarginalMode::doubled) == doctest::Approx(1.5));
  const Network sym({Matrix::Ones(2, 2), Matrix::Ones(1, 2)}, Activation::relu());
  const Vector p = marginal(sym, unit_weights(2), 1, MarginalMode::collapsed);
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.5));
}

TEST_CASE("doubled marginals sum to the collapsed ones") {
  Philox4x64 rng(8, 0);
  for (int t = 0; t < 20; ++t) {
    const Network net = random_network({3, 4, 5, 2}, rng);
    for (std::size_t l = 1; l <= 2; ++l) {
      const Vector c = marginal(net, unit_weights(3), l, MarginalMode::collapsed);
      const Vector d = marginal(net, unit_weights(3), l, MarginalMode::doubled);
      const Eigen::Index n = c.size();
      CHECK((d.head(n) + d.tail(n) - c).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(d.sum() == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("chain quantities match exhaustive enumeration") {
  Philox4x64 rng(21, 0);
  for (int t = 0; t < 30; ++t) {
    const std::size_t depth = 2 + t % 3;
    std::vector<std::size_t> dims{1 + rng.below(4)};
    for (std::size_t l = 0; l < depth; ++l) dims.push_back(1 + rng.below(5));
    const Network net = random_network(dims, rng);
    const Dataset data = random_dataset(5, dims[0], rng);
    for (double q : {1.0, 2.0}) {
      const InputWeighting w = input_weights(data, q);
      const PathEnumeration e = enumerate_paths_oracle(net, w);
      const PathChain c = build_chain(net, w);
      CHECK(rel(c.variation.to_double(), e.variation) < 1e-10);
      for (std::size_t l = 1; l < depth; ++l) {
        const Vector m = marginal(net, c, l, MarginalMode::collapsed);
        CHECK((m - e.marginals[l]).cwiseAbs().maxCoeff() < 1e-10);
      }
    }
  }
}

TEST_CASE("enumeration guard") {
  Philox4x64 rng(1, 0);
  std::vector<std::size_t> dims(11, 8);
  const Network net = random_network(dims, rng);
  CHECK_THROWS_AS(enumerate_paths_oracle(net, unit_weights(8)), Error);
}

TEST_CASE("product of absolute matrices") {
  const Matrix p = product_abs(reference_network());
  CHECK(p(0, 0) == 4.0);
  CHECK(p(0, 1) == 6.0);
  const Network id({Matrix::Identity(3, 3), Matrix::Identity(3, 3)}, Activation::relu());
  CHECK(product_abs(id).isIdentity());
}

TEST_CASE("induced and group norms") {
  const Matrix a = mat(2, 2, {1, 2, 3, 4});
  CHECK(induced_norm(a, kInf) == 7.0);
  CHECK(induced_norm(a, 1.0) == 6.0);
  CHECK(induced_norm(mat(2, 2, {3, 0, 0, 4}), 2.0) == doctest::Approx(4.0));
  CHECK(group_norm_q1(a, 2.0) == doctest::Approx(7.23607).epsilon(1e-6));
  CHECK(group_norm_q1(mat(1, 2, {4, 6}), 1.0) == 10.0);
  CHECK(group_norm_q1(Matrix::Identity(2, 2), 2.0) == 2.0);
  CHECK(group_norm_q1(a, 2.0, GroupOrientation::columns) ==
        doctest::Approx(std::sqrt(10.0) + std::sqrt(20.0)));
}

TEST_CASE("power iteration agrees with the SVD") {
  Philox4x64 rng(4, 4);
  for (int t = 0; t < 40; ++t) {
    const auto rows = static_cast<Eigen::Index>(1 + rng.below(12));
    const auto cols = static_cast<Eigen::Index>(1 + rng.below(12));
    Matrix a(rows, cols);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
    const Eigen::MatrixXd dense = a;
    const double want = Eigen::JacobiSVD<Eigen::MatrixXd>(dense).singularValues()[0];
    const SpectralEstimate got = spectral_norm(a);
    CHECK(got.converged);
    CHECK(rel(got.value, want) < 1e-8);
  }
}

TEST_CASE("variation bounds on the reference network") {
  const Network net = reference_network();
  const Dataset s = reference_dataset();
  const auto [a1, b1] = variation_bounds(net, s, 1.0);
  CHECK(a1 == doctest::Approx(10.0));
  CHECK(b1 == doctest::Approx(10.0));
  const auto [a2, b2] = variation_bounds(net, s, 2.0);
  CHECK(a2 == doctest::Approx(10.198).epsilon(1e-4));
  CHECK(b2 == doctest::Approx(10.198).epsilon(1e-4));
  CHECK_THROWS_AS(variation_bounds(net, s, 3.0), Error);
}

TEST_CASE("column-oriented group norm reproduces 14.142 but is not a bound") {
  // sqrt(2) * ||[4, 6]||_{columns} = sqrt(2) * 10.
  const Network net = reference_network();
  const Matrix p = product_abs(net);
  CHECK(std::sqrt(2.0) * group_norm_q1(p, 2.0, GroupOrientation::columns) ==
        doctest::Approx(14.142).epsilon(1e-4));
  // d = 1, k = 3, all-ones, x = 1: V_2 = 3, columns give 1 * sqrt(3).
  const Network wide({Matrix::Ones(1, 1), Matrix::Ones(3, 1)}, Activation::relu());
  const Dataset one(mat(1, 1, {1.0}));
  const double v = variation(wide, one, 2.0).to_double();
  CHECK(v == doctest::Approx(3.0));
  CHECK(group_norm_q1(product_abs(wide), 2.0, GroupOrientation::columns) < v);
  const auto [a, b] = variation_bounds(wide, one, 2.0);
  CHECK(a >= v * (1 - 1e-12));
  CHECK(b >= v * (1 - 1e-12));
}

TEST_CASE("variation bounds hold on random networks") {
  Philox4x64 rng(5, 5);
  for (int t = 0; t < 100; ++t) {
    std::vector<std::size_t> dims{1 + rng.below(5)};
    const std::size_t depth = 2 + rng.below(3);
    for (std::size_t l = 0; l < depth; ++l) dims.push_back(1 + rng.below(5));
    const Network net = random_network(dims, rng);
    const Dataset data = random_dataset(1 + rng.below(8), dims[0], rng);
    for (double q : {1.0, 2.0}) {
      const double v = variation(net, data, q).to_double();
      const auto [a, b] = variation_bounds(net, data, q);
      CHECK(v <= a * (1 + 1e-12));
      CHECK(v <= b * (1 + 1e-12));
    }
  }
}

TEST_CASE("path norms") {
  const Network net = reference_network();
  CHECK(path_norm_phi(net, 2.0).total.to_double() == doctest::Approx(std::sqrt(30.0)));
  CHECK(path_norm_phi(net, 1.0).total.to_double() == doctest::Approx(10.0));
  Philox4x64 rng(6, 0);
  for (int t = 0; t < 30; ++t) {
    const Network r = random_network({2, 3, 3, 2}, rng);
    const PathEnumeration e = enumerate_paths_oracle(r, unit_weights(2));
    // phi_p by brute force: per output, sum of |prod w|^p over its paths.
    for (double p : {1.0, 2.0, 3.0}) {
      std::vector<double> per(2, 0.0);
      for (std::size_t i = 0; i < e.paths.size(); ++i) {
        per[e.paths[i].back()] += std::pow(e.weights[i], p);
      }
      const PathNorm phi = path_norm_phi(r, p);
      for (std::size_t j = 0; j < 2; ++j) {
        CHECK(rel(phi.per_output[j].to_double(), std::pow(per[j], 1.0 / p)) < 1e-10);
      }
    }
    double frob = 1.0;
    for (const auto& w : r.layers()) frob *= w.norm();
    CHECK(path_norm_phi(r, 2.0).total.to_double() <= frob * (1 + 1e-12));
  }
}

TEST_CASE("deep chains stay finite in log space") {
  std::vector<Matrix> layers(1000, Matrix::Constant(2, 2, 4.0));
  layers.front() = Matrix::Constant(2, 3, 4.0);
  layers.back() = Matrix::Constant(1, 2, 4.0);
  const Network net(std::move(layers), Activation::relu());
  const PathChain c = build_chain(net, unit_weights(3));
  // V = 3 * 2^999 * 4^1000.
  CHECK(c.variation.log2() == doctest::Approx(std::log2(3.0) + 999.0 + 2000.0));
  CHECK(std::isinf(c.variation.to_double()));
  CHECK(path_complexity(net, unit_weights(3), MarginalMode::doubled) ==
        doctest::Approx((1.0 + 999.0 * std::sqrt(2.0)) / 1000.0));
  CHECK_THROWS_AS(product_abs(net), Error);
}
