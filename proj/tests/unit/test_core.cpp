#include <cmath>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "pathsample/categorical.hpp"
#include "pathsample/error.hpp"
#include "pathsample/log_scaled.hpp"
#include "pathsample/net.hpp"
#include "pathsample/rng.hpp"
#include "pathsample/verify.hpp"

using namespace pathsample;
using fixtures::mat;
using fixtures::vec;

// ---------------------------------------------------------------------------
// Philox4x64-10, reference outputs of numpy.random.Philox(key=..., counter=...).random_raw(8)

TEST_CASE("philox matches numpy for key (0, 0)") {
  Philox4x64 g(0, 0);
  const std::uint64_t want[] = {0x02f4ba6408e4d89bULL, 0x3dd62b0b9ca8c5b2ULL, 0x1c8667a55d902e79ULL,
                                0x907d7a052fd5b4dcULL, 0x809bf322883987c3ULL, 0x471128b9e807f7ddULL,
                                0xf250ba0dbec065b7ULL, 0xfc6ed66767a457bcULL};
  for (auto w : want) CHECK(g() == w);
}

TEST_CASE("philox matches numpy for key (7, 3)") {
  Philox4x64 g(7, 3);
  const std::uint64_t want[] = {0x7b6cc7b1862cc5f2ULL, 0xb960f2ea4b3f8d9fULL, 0x0cdd72e015deb1a6ULL,
                                0x50edb0d22a6a6fd5ULL, 0xae45891bf7ab4df3ULL, 0x32005aae5c700f2cULL,
                                0x8338143a55135bc9ULL, 0x505c59bbd33bc5faULL};
  for (auto w : want) CHECK(g() == w);
}

TEST_CASE("philox matches numpy with an explicit counter") {
  Philox4x64 g({0xdeadbeefULL, 1}, {41, 0, 0, 0});
  const std::uint64_t want[] = {0x974f5e84421803c9ULL, 0xd24497abe628e8ffULL, 0x971873832dc79a24ULL,
                                0x8c370dd02c59550aULL, 0xe4dd1b9b8947c366ULL, 0x99be11a401aea0d7ULL,
                                0x3826fc154d696904ULL, 0x3e80fffe03f419adULL};
  for (auto w : want) CHECK(g() == w);
}

TEST_CASE("uniform uses the top 53 bits like numpy random()") {
  Philox4x64 g(7, 3);
  CHECK(g.uniform() == 0.4821286018761155);
  CHECK(g.uniform() == 0.7241355726248441);
  CHECK(g.uniform() == 0.05025403948627161);
}

TEST_CASE("below stays in range and hits every value") {
  Philox4x64 g(1, 2);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto v = g.below(7);
    REQUIRE(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("normal draws have unit moments") {
  Philox4x64 g(11, 0);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = g.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("streams with different ids differ") {
  Philox4x64 a(5, 0), b(5, 1);
  CHECK(a() != b());
}

// ---------------------------------------------------------------------------
// LogScaled

TEST_CASE("log-scaled arithmetic") {
  const auto a = LogScaled::from_double(6.0);
  const auto b = LogScaled::from_double(0.75);
  CHECK((a * b).to_double() == doctest::Approx(4.5));
  CHECK((a / b).to_double() == doctest::Approx(8.0));
  CHECK((a + b).to_double() == doctest::Approx(6.75));
  CHECK(a.pow(0.5).to_double() == doctest::Approx(std::sqrt(6.0)));
  CHECK(b < a);
  CHECK(LogScaled::zero().is_zero());
  CHECK((LogScaled::zero() + a) == a);
  CHECK(std::isinf(LogScaled::zero().log2()));
}

TEST_CASE("log-scaled survives products beyond double range") {
  LogScaled x = LogScaled::from_double(1.0);
  for (int i = 0; i < 1000; ++i) x *= LogScaled::from_double(10.0);
  CHECK(x.log10() == doctest::Approx(1000.0));
  CHECK(std::isinf(x.to_double()));
  for (int i = 0; i < 999; ++i) x /= LogScaled::from_double(10.0);
  CHECK(x.to_double() == doctest::Approx(10.0));
}

TEST_CASE("scaled vectors renormalize") {
  ScaledVector v{vec({3.0, 1024.0}), 5};
  v.normalize();
  CHECK(v.values.maxCoeff() >= 0.5);
  CHECK(v.values.maxCoeff() < 1.0);
  CHECK(v.at(1).to_double() == doctest::Approx(1024.0 * 32.0));
  CHECK(v.sum().to_double() == doctest::Approx(1027.0 * 32.0));
  CHECK(v.render()[0] == doctest::Approx(96.0));
}

// ---------------------------------------------------------------------------
// Networks

TEST_CASE("reference network forward values") {
  const Network net = reference_network();
  CHECK(net.forward(vec({0, 0}))[0] == 0.0);
  CHECK(net.forward(vec({1, 0}))[0] == 1.0);
  CHECK(net.forward(vec({0, 1}))[0] == 4.0);
  const Matrix batch = net.forward_batch(mat(2, 2, {1, 0, 0, 1}));
  CHECK(batch(0, 0) == 1.0);
  CHECK(batch(1, 0) == 4.0);
  CHECK(net.path_count() == 4.0);
}

TEST_CASE("identity activation gives the linear product") {
  const Network net({mat(2, 2, {1, -2, -3, 4}), mat(1, 2, {1, 1})}, Activation::identity());
  CHECK(net.forward(vec({1, 1}))[0] == 0.0);
}

TEST_CASE("network validation") {
  CHECK_THROWS_AS(Network({mat(2, 2, {1, 2, 3, 4})}, Activation::relu()), Error);
  CHECK_THROWS_AS(Network({mat(2, 2, {1, 2, 3, 4}), mat(1, 3, {1, 1, 1})}, Activation::relu()),
                  Error);
  CHECK_THROWS_AS(Network({mat(1, 1, {NAN}), mat(1, 1, {1})}, Activation::relu()), Error);
  const Network net = reference_network();
  CHECK_THROWS_AS(net.forward(vec({1, 2, 3})), Error);
  CHECK_THROWS_AS(Activation::parse("sigmoid"), Error);
  CHECK_THROWS_AS(Activation::leaky_relu(1.5), Error);
  CHECK(Activation::parse("leaky-relu", 0.1).alpha == 0.1);
}

TEST_CASE("activations are positive homogeneous and 1-Lipschitz") {
  Philox4x64 rng(3, 0);
  for (const Activation act :
       {Activation::relu(), Activation::leaky_relu(0.2), Activation::identity()}) {
    CHECK(act(0.0) == 0.0);
    for (int i = 0; i < 1000; ++i) {
      const double z = 4.0 * rng.normal();
      const double w = 4.0 * rng.normal();
      const double a = std::exp(rng.normal());
      CHECK(act(a * z) == doctest::Approx(a * act(z)).epsilon(1e-14));
      CHECK(std::abs(act(z) - act(w)) <= std::abs(z - w) + 1e-15);
    }
  }
}

TEST_CASE("sign split of the reference network") {
  const DoubledNetwork d = sign_split(reference_network());
  const Matrix& w1 = d.abs_layers[0];
  REQUIRE(w1.rows() == 4);
  REQUIRE(w1.cols() == 4);
  // Row (0,+): entry 1 at column (0,+), entry 2 at column (1,-).
  CHECK(w1(0, 0) == 1.0);
  CHECK(w1(0, 3) == 2.0);
  CHECK(w1(0, 1) == 0.0);
  CHECK(w1(0, 2) == 0.0);
  CHECK(d.dims == std::vector<std::size_t>{4, 4, 1});
  CHECK(d.forward(vec({1, 0}))[0] == 1.0);
}

TEST_CASE("sign split preserves forward values on random networks") {
  Philox4x64 rng(17, 0);
  for (int t = 0; t < 50; ++t) {
    const Activation act = t % 3 == 0   ? Activation::relu()
                           : t % 3 == 1 ? Activation::leaky_relu(0.3)
                                        : Activation::identity();
    const Network net = random_network({3, 5, 4, 2}, rng, act);
    const DoubledNetwork d = sign_split(net);
    for (std::size_t m = 0; m < d.abs_layers.size(); ++m) {
      CHECK(d.abs_layers[m].minCoeff() >= 0.0);
      if (m + 1 < d.abs_layers.size()) {
        const Eigen::Index h = d.abs_layers[m].rows() / 2;
        CHECK(d.abs_layers[m].topRows(h) == d.abs_layers[m].bottomRows(h));
      }
    }
    for (int k = 0; k < 5; ++k) {
      Vector x(3);
      for (auto& v : x) v = rng.normal();
      const Vector a = net.forward(x);
      const Vector b = d.forward(x);
      CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + a.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("datasets validate labels") {
  CHECK_THROWS_AS(Dataset(Matrix(0, 2)), Error);
  const Dataset d(mat(2, 1, {1, 2}), std::vector<int>{0, 2});
  CHECK_NOTHROW(d.check_labels(3));
  CHECK_THROWS_AS(d.check_labels(2), Error);
}

// ---------------------------------------------------------------------------
// Categorical sampler

TEST_CASE("categorical sampler frequencies in scan and alias modes") {
  for (std::size_t n : {3u, 12u}) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = static_cast<double>(i % 4);  // zeros excluded
    const CategoricalSampler s(w);
    CHECK(s.uses_alias() == (s.support().size() >= CategoricalSampler::kAliasThreshold));
    double total = 0;
    for (double x : w) total += x;
    Philox4x64 rng(99, n);
    std::vector<double> freq(n, 0.0);
    const int draws = 200000;
    for (int i = 0; i < draws; ++i) freq[s(rng)] += 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = w[i] / total;
      const double sd = std::sqrt(p * (1 - p) / draws);
      CHECK(std::abs(freq[i] / draws - p) <= 5 * sd + 1e-12);
    }
  }
}

TEST_CASE("categorical sampler rejects bad weights") {
  CHECK_THROWS_AS(CategoricalSampler(std::vector<double>{0.0, 0.0}), Error);
  CHECK_THROWS_AS(CategoricalSampler(std::vector<double>{1.0, -1.0}), Error);
  const CategoricalSampler one(std::vector<double>{0.0, 5.0});
  Philox4x64 rng(1, 1);
  for (int i = 0; i < 10; ++i) CHECK(one(rng) == 1);
}
