#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "smoothcert/bounds.hpp"
#include "smoothcert/errors.hpp"
#include "smoothcert/oracle.hpp"

using namespace smoothcert;
using namespace smoothcert::oracle;

TEST_CASE("brute force on an even pair is zero") {
  const std::vector<double> p{0.5, 0.5};
  for (double alpha : {1.5, 2.0, 7.0}) CHECK(std::abs(lemma1_brute_force(p, bounds::RenyiOrder(alpha), 0.01).divergence) < 1e-12);
}

TEST_CASE("brute force brackets the closed form") {
  const std::vector<double> p{0.8, 0.1, 0.1};
  const auto m = lemma1_brute_force(p, bounds::RenyiOrder(2.0), 0.005);
  const double closed = bounds::lemma1_lower_bound(bounds::TopTwo(0.8, 0.1), bounds::RenyiOrder(2.0));
  CHECK(m.divergence >= closed - 1e-12);
  CHECK(m.divergence <= closed + 1e-3);
  // The minimizer ties its two largest entries.
  auto q = m.minimizer;
  std::sort(q.rbegin(), q.rend());
  CHECK(q[0] - q[1] <= 0.005 + 1e-12);
}

TEST_CASE("brute force gap shrinks with the grid") {
  std::mt19937_64 rng(2);
  std::gamma_distribution<double> g(1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> p{g(rng), g(rng), g(rng)};
    double s = p[0] + p[1] + p[2];
    for (double& v : p) v /= s;
    std::vector<double> sorted(p);
    std::sort(sorted.rbegin(), sorted.rend());
    const bounds::RenyiOrder order(2.0);
    const double closed = bounds::lemma1_lower_bound(bounds::TopTwo(sorted[0], sorted[1]), order);
    double prev = INFINITY;
    for (double step : {0.02, 0.01, 0.005}) {
      const double gap = lemma1_brute_force(p, order, step).divergence - closed;
      CHECK(gap >= -1e-4);
      CHECK(gap <= prev + 1e-12);
      prev = gap;
    }
  }
}

TEST_CASE("brute force handles zero entries and validates input") {
  const std::vector<double> p{0.9, 0.1, 0.0};
  const auto m = lemma1_brute_force(p, bounds::RenyiOrder(2.0), 0.01);
  const double closed = bounds::lemma1_lower_bound(bounds::TopTwo(0.9, 0.1), bounds::RenyiOrder(2.0));
  CHECK(m.divergence >= closed - 1e-12);
  CHECK(m.divergence <= closed + 1e-2);
  const std::vector<double> five{0.2, 0.2, 0.2, 0.2, 0.2};
  CHECK_THROWS_AS(lemma1_brute_force(five, bounds::RenyiOrder(2.0), 0.01), InvalidArgument);
  const std::vector<double> unnormalized{0.5, 0.6};
  CHECK_THROWS_AS(lemma1_brute_force(unnormalized, bounds::RenyiOrder(2.0), 0.01), InvalidArgument);
  const std::vector<double> ok{0.6, 0.4};
  CHECK_THROWS_AS(lemma1_brute_force(ok, bounds::RenyiOrder(2.0), 0.1), InvalidArgument);
  CHECK_THROWS_AS(lemma1_brute_force(ok, bounds::RenyiOrder(2.0), 0.003), InvalidArgument);
}

TEST_CASE("alpha grid search") {
  CHECK(alpha_sup_brute_force(bounds::TopTwo(0.4, 0.4), 1.0, 1000) == 0.0);
  const double r = alpha_sup_brute_force(bounds::TopTwo(0.8, 0.1), 0.5, 100000);
  CHECK(r == doctest::Approx(bounds::l2_radius(bounds::TopTwo(0.8, 0.1), bounds::NoiseScale::gaussian(0.5))).epsilon(1e-6));
  for (double p1 : {0.2, 0.7, 0.95}) {
    const double limit = 1.3 * std::sqrt(2.0 * -std::log1p(-p1));
    CHECK(alpha_sup_brute_force(bounds::TopTwo(p1, 0.0), 1.3, 1000) == doctest::Approx(limit).epsilon(1e-8));
  }
  CHECK_THROWS_AS(alpha_sup_brute_force(bounds::TopTwo(1.0, 0.0), 1.0, 100), InfiniteRadius);
  CHECK_THROWS_AS(alpha_sup_brute_force(bounds::TopTwo(0.6, 0.2), 0.0, 100), InvalidArgument);
}

TEST_CASE("alpha grid agrees with the optimizer on random inputs") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const double p1 = 0.05 + 0.9 * u(rng);
    const double p2 = std::min(p1, 1.0 - p1) * u(rng);
    const bounds::TopTwo top(p1, p2);
    const double sigma = 0.1 + u(rng);
    const double grid = alpha_sup_brute_force(top, sigma, 200000);
    const double opt = bounds::l2_radius(top, bounds::NoiseScale::gaussian(sigma));
    CHECK(std::abs(grid - opt) <= 1e-6 * opt);
    CHECK(opt >= grid * (1.0 - 1e-12));
  }
}

TEST_CASE("numerical renyi integral") {
  CHECK(std::abs(renyi_integral_1d(0.0, 1.0, bounds::RenyiOrder(2.0))) < 1e-12);
  CHECK(renyi_integral_1d(1.0, 1.0, bounds::RenyiOrder(2.0)) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(renyi_integral_1d(2.0, 1.0, bounds::RenyiOrder(3.0)) == doctest::Approx(6.0).epsilon(1e-9));
  for (double d : {0.1, 0.5, 3.0}) {
    for (double sigma : {0.3, 1.0, 2.5}) {
      for (double alpha : {1.1, 2.0, 10.0}) {
        const bounds::RenyiOrder order(alpha);
        CHECK(std::abs(renyi_integral_1d(d, sigma, order) - bounds::gaussian_renyi_divergence(d * d, sigma, order)) < 1e-6);
      }
    }
  }
  CHECK_THROWS_AS(renyi_integral_1d(1.0, 0.0, bounds::RenyiOrder(2.0)), InvalidArgument);
}
