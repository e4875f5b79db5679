#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "tokenopt/graph.hpp"
#include "tokenopt/markov_chain.hpp"
#include "tokenopt/objective.hpp"
#include "tokenopt/rng.hpp"

using namespace tokenopt;

namespace {

Eigen::VectorXd random_point(int dim, Rng& rng, double scale = 1.0) {
  Eigen::VectorXd x(dim);
  for (int k = 0; k < dim; ++k) x[k] = scale * rng.normal();
  return x;
}

void check_gradients_fd(const Objective& obj, int points, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd g(obj.dim());
  for (int p = 0; p < points; ++p) {
    const Eigen::VectorXd x = random_point(obj.dim(), rng);
    for (int v = 0; v < obj.components(); ++v) {
      obj.component_gradient(v, x, g);
      const Eigen::VectorXd fd = oracles::fd_gradient(obj, v, x);
      CHECK((g - fd).norm() <= 1e-5 * (1.0 + g.norm()));
    }
  }
}

void check_gradient_lipschitz(const Objective& obj, int pairs, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd gx(obj.dim()), gy(obj.dim());
  for (int p = 0; p < pairs; ++p) {
    const Eigen::VectorXd x = random_point(obj.dim(), rng, 2.0);
    const Eigen::VectorXd y = random_point(obj.dim(), rng, 2.0);
    for (int v = 0; v < obj.components(); ++v) {
      obj.component_gradient(v, x, gx);
      obj.component_gradient(v, y, gy);
      CHECK((gx - gy).norm() <= obj.smoothness() * (x - y).norm() * (1.0 + 1e-8));
    }
  }
}

}  // namespace

TEST_CASE("sigmoid loss, homogeneous") {
  const ObjectivePtr obj = sigmoid_loss(12, 5, SigmoidData::homogeneous, 31);
  CHECK(obj->components() == 12);
  CHECK(obj->dim() == 5);
  CHECK(obj->smoothness() > 0.0);
  CHECK(obj->strong_convexity() == 0.0);
  CHECK(!obj->minimizer());
  check_gradients_fd(*obj, 10, 7);
  check_gradient_lipschitz(*obj, 20, 8);

  // same seed draws the same data
  const ObjectivePtr again = sigmoid_loss(12, 5, SigmoidData::homogeneous, 31);
  Rng rng(4);
  const Eigen::VectorXd x = random_point(5, rng);
  for (int v = 0; v < 12; ++v)
    CHECK(obj->component_value(v, x) == doctest::Approx(again->component_value(v, x)));
}

TEST_CASE("sigmoid loss, two-hot heterogeneous") {
  const int n = 50;
  const ObjectivePtr obj = sigmoid_loss(n, 10, SigmoidData::two_hot_heterogeneous, 42);
  Rng rng(5);
  const Eigen::VectorXd x = random_point(10, rng);
  Eigen::VectorXd g(10);
  for (int v = 0; v < n; ++v) {
    if (v == 0 || v == 25) continue;
    CHECK(obj->component_value(v, x) == 0.0);
    obj->component_gradient(v, x, g);
    CHECK(g.norm() == 0.0);
  }
  // network average equals the mean of the two renormalized active losses
  CHECK(obj->value(x) ==
        doctest::Approx((obj->component_value(0, x) + obj->component_value(25, x)) / n));
  check_gradients_fd(*obj, 6, 9);

  // the stacked logit fit gives an exact global minimum: sigma(x* a) = b
  REQUIRE(obj->minimizer().has_value());
  CHECK(*obj->minimum_value() == 0.0);
  CHECK(obj->value(*obj->minimizer()) <= 1e-12);
  obj->gradient(*obj->minimizer(), g);
  CHECK(g.norm() <= 1e-8);
}

TEST_CASE("quadratic interpolation objective") {
  const ObjectivePtr iso = quadratic_interpolation(6, 4, 11, 1.0);
  REQUIRE(iso->minimizer().has_value());
  Rng rng(6);
  const Eigen::VectorXd x = random_point(4, rng);
  // condition 1 collapses every component to (1/2)|x - x*|^2
  CHECK(iso->value(x) == doctest::Approx(0.5 * (x - *iso->minimizer()).squaredNorm()));

  const ObjectivePtr obj = quadratic_interpolation(8, 6, 12, 10.0);
  CHECK(obj->smoothness() == doctest::Approx(10.0));
  CHECK(obj->strong_convexity() == doctest::Approx(1.0));
  REQUIRE(obj->minimizer().has_value());
  CHECK(*obj->minimum_value() == doctest::Approx(0.0));
  Eigen::VectorXd g(6);
  obj->gradient(*obj->minimizer(), g);
  CHECK(g.norm() <= 1e-10);  // every component minimized at the shared point
  // interpolation regime
  const DissimilarityStats stats = dissimilarity_stats(*obj, *obj->minimizer(), 32, 3);
  CHECK(stats.sigma_star_sq == doctest::Approx(0.0));
  check_gradients_fd(*obj, 8, 13);
  check_gradient_lipschitz(*obj, 20, 14);

  // sandwich f(x) - f* between the strong-convexity and smoothness quadratics
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd y = random_point(6, rng, 3.0);
    const double gap = obj->value(y) - *obj->minimum_value();
    const double dist_sq = (y - *obj->minimizer()).squaredNorm();
    CHECK(gap >= 0.5 * obj->strong_convexity() * dist_sq * (1.0 - 1e-9));
    CHECK(gap <= 0.5 * obj->smoothness() * dist_sq * (1.0 + 1e-9));
  }
}

TEST_CASE("quadratic heterogeneous objective") {
  QuadraticHetOptions opt;
  opt.condition = 25.0;
  opt.spread = 2.0;
  const ObjectivePtr obj = quadratic_heterogeneous(10, 5, 17, opt);
  REQUIRE(obj->minimizer().has_value());
  Eigen::VectorXd g(5);
  obj->gradient(*obj->minimizer(), g);
  CHECK(g.norm() <= 1e-9);
  Rng rng(18);
  for (int trial = 0; trial < 10; ++trial)
    CHECK(obj->value(random_point(5, rng, 2.0)) >= *obj->minimum_value() - 1e-12);
  const DissimilarityStats stats = dissimilarity_stats(*obj, *obj->minimizer(), 16, 4);
  CHECK(stats.sigma_star_sq > 0.0);
  check_gradients_fd(*obj, 8, 19);

  // shared-matrix variant: component deviations from the mean gradient do not
  // depend on x (exact dissimilarities)
  opt.shared_matrix = true;
  opt.linear_spectrum = true;
  const ObjectivePtr shared = quadratic_heterogeneous(10, 5, 17, opt);
  Eigen::VectorXd gv(5), gmean(5);
  const Eigen::VectorXd xa = random_point(5, rng), xb = random_point(5, rng, 3.0);
  for (int v = 0; v < 10; ++v) {
    shared->gradient(xa, gmean);
    shared->component_gradient(v, xa, gv);
    const double at_a = (gv - gmean).squaredNorm();
    shared->gradient(xb, gmean);
    shared->component_gradient(v, xb, gv);
    const double at_b = (gv - gmean).squaredNorm();
    CHECK(at_a == doctest::Approx(at_b).epsilon(1e-9));
  }
}

TEST_CASE("two-point disagreement") {
  const ObjectivePtr obj = two_point_disagreement();
  CHECK(obj->components() == 2);
  CHECK(obj->dim() == 1);
  CHECK(obj->smoothness() == 1.0);
  CHECK(obj->strong_convexity() == 1.0);
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  CHECK(obj->value(zero) == doctest::Approx(0.5));  // f(x) = (x^2 + 1)/2
  Eigen::VectorXd g(1);
  obj->gradient(zero, g);
  CHECK(g[0] == doctest::Approx(0.0));
  obj->component_gradient(0, zero, g);
  CHECK(g[0] == doctest::Approx(-1.0));
  obj->component_gradient(1, zero, g);
  CHECK(g[0] == doctest::Approx(1.0));
  const DissimilarityStats stats = dissimilarity_stats(*obj, zero, 8, 5);
  CHECK(stats.sigma_star_sq == doctest::Approx(1.0));
  CHECK(stats.sigma_bar_sq == doctest::Approx(1.0));
  check_gradients_fd(*obj, 10, 20);
}

TEST_CASE("worst-case split function") {
  const int n = 8, K = 5;
  const ObjectivePtr obj = worst_case_chain(K, 1.0, 1.0, 0, 4, n);
  CHECK(obj->dim() == 2 * K + 1);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(obj->dim());
  Eigen::VectorXd g(obj->dim());
  // weighted gradients at the origin: -b e_0 at node v, zero at node w
  obj->component_gradient(0, zero, g);
  CHECK((obj->weights()[0] * g + Eigen::VectorXd::Unit(obj->dim(), 0)).norm() <= 1e-12);
  obj->component_gradient(4, zero, g);
  CHECK(g.norm() == 0.0);
  for (int v : {1, 2, 3, 5, 6, 7}) {
    obj->component_gradient(v, zero, g);
    CHECK(g.norm() == 0.0);
    CHECK(obj->component_value(v, zero) == 0.0);
  }
  check_gradients_fd(*obj, 8, 21);
  check_gradient_lipschitz(*obj, 15, 22);
  CHECK_THROWS_AS(worst_case_chain(0, 1.0, 1.0, 0, 4, 8), std::invalid_argument);

  // alpha = 1 keeps the total function bounded below with a known minimizer
  REQUIRE(obj->minimizer().has_value());
  obj->gradient(*obj->minimizer(), g);
  CHECK(g.norm() <= 1e-9);
}

TEST_CASE("worst-case coordinate discovery follows the visit alternation") {
  const int n = 8, K = 6;
  const ObjectivePtr obj = worst_case_chain(K, 1.0, 1.0, 0, 4, n);
  const MarkovChain chain = chain_simple_rw(build_cycle(n));
  const double gamma = 1.0 / (2.0 * obj->smoothness());
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
    const auto path = sample_trajectory(chain, StartSpec::at(0), 3000, seed);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(obj->dim());
    Eigen::VectorXd g(obj->dim());
    int legs = 0;
    int waiting_for = 0;  // alternation v, w, v, w, ...
    for (int v : path) {
      if (v == waiting_for) {
        ++legs;
        waiting_for = waiting_for == 0 ? 4 : 0;
      }
      obj->component_gradient(v, x, g);
      x -= gamma * g;
      int highest = -1;
      for (int k = 0; k < obj->dim(); ++k)
        if (x[k] != 0.0) highest = k;
      CHECK(highest <= legs - 1);
    }
    CHECK(legs >= 1);
  }
}

TEST_CASE("dissimilarity stats on the homogeneous sigmoid") {
  const ObjectivePtr obj = sigmoid_loss(50, 10, SigmoidData::homogeneous, 42);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(10);
  const DissimilarityStats a = dissimilarity_stats(*obj, zero, 32, 6);
  const DissimilarityStats b = dissimilarity_stats(*obj, zero, 32, 6);
  CHECK(a.sigma_bar_sq == b.sigma_bar_sq);
  CHECK(a.sigma_max_sq == b.sigma_max_sq);
  CHECK(a.sigma_bar_sq > 0.0);
  CHECK(a.sigma_max_sq >= a.sigma_bar_sq);
  CHECK(std::isfinite(a.sigma_max_sq));
}

TEST_CASE("estimated minimum value") {
  const ObjectivePtr quad = quadratic_interpolation(5, 4, 23, 8.0);
  const double est = estimate_f_star(*quad, Eigen::VectorXd::Zero(4), 20000, 3, 7);
  CHECK(est == doctest::Approx(0.0).epsilon(1e-8));
  const double two_pt = estimate_f_star(*two_point_disagreement(), Eigen::VectorXd::Zero(1), 20000, 3, 7);
  CHECK(two_pt == doctest::Approx(0.5));
}
