#include <doctest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "tokenopt/graph.hpp"
#include "tokenopt/markov_chain.hpp"
#include "tokenopt/objective.hpp"
#include "tokenopt/optimizers.hpp"
#include "tokenopt/rng.hpp"

using namespace tokenopt;

namespace {

MarkovChain identity_chain(int n) {
  return MarkovChain::from_matrix(Eigen::MatrixXd::Identity(n, n),
                                  Eigen::VectorXd::Constant(n, 1.0 / n));
}

}  // namespace

TEST_CASE("mc_sgd single steps") {
  const ObjectivePtr two = two_point_disagreement();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
  const Eigen::VectorXd x1 = mc_sgd_step(x, 0, 0.1, *two);
  CHECK(x1[0] == doctest::Approx(0.1));  // grad f_0(0) = -1

  // a stationary component leaves the iterate unchanged
  const ObjectivePtr wc = worst_case_chain(3, 1.0, 1.0, 0, 2, 4);
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(wc->dim());
  CHECK((mc_sgd_step(zero, 1, 0.05, *wc) - zero).norm() == 0.0);

  CHECK_THROWS_AS(mc_sgd_step(zero, 1, 0.0, *wc), std::invalid_argument);

  // n = 1: identical to plain gradient descent
  const ObjectivePtr quad = quadratic_interpolation(1, 3, 5, 4.0);
  Eigen::VectorXd xs = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd xg = xs, g(3);
  for (int t = 0; t < 200; ++t) {
    xs = mc_sgd_step(xs, 0, 0.1, *quad);
    quad->gradient(xg, g);
    xg -= 0.1 * g;
    CHECK((xs - xg).norm() <= 1e-12 * (1.0 + xg.norm()));
  }
}

TEST_CASE("noisy steps") {
  const ObjectivePtr obj = sigmoid_loss(6, 4, SigmoidData::homogeneous, 3, /*samples=*/5);
  Rng rng(9);
  Eigen::VectorXd x(4);
  for (int k = 0; k < 4; ++k) x[k] = rng.normal();

  // zero-sd gaussian degenerates to the plain step
  NoiseSpec none{NoiseSpec::Kind::gaussian, 0.0, 0};
  Rng r1(1);
  CHECK((mc_sgd_noisy_step(x, 2, 0.05, *obj, none, r1) - mc_sgd_step(x, 2, 0.05, *obj)).norm() ==
        0.0);

  // full-batch minibatch degenerates to the plain step
  NoiseSpec full{NoiseSpec::Kind::minibatch, 0.0, 5};
  Rng r2(2);
  CHECK((mc_sgd_noisy_step(x, 2, 0.05, *obj, full, r2) - mc_sgd_step(x, 2, 0.05, *obj)).norm() <=
        1e-14);

  // unbiasedness: mean stochastic gradient matches grad f_v over many draws
  Eigen::VectorXd target(4);
  obj->component_gradient(2, x, target);
  for (const NoiseSpec spec : {NoiseSpec{NoiseSpec::Kind::gaussian, 0.5, 0},
                               NoiseSpec{NoiseSpec::Kind::minibatch, 0.0, 2}}) {
    Rng r3(7);
    const int draws = 100000;
    const double gamma = 0.05;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(4);
    double second_moment = 0.0;
    for (int i = 0; i < draws; ++i) {
      const Eigen::VectorXd ghat = (x - mc_sgd_noisy_step(x, 2, gamma, *obj, spec, r3)) / gamma;
      mean += ghat;
      second_moment += (ghat - target).squaredNorm();
    }
    mean /= draws;
    const double sd = std::sqrt(second_moment / draws);
    CHECK((mean - target).norm() <= 4.0 * sd / std::sqrt(static_cast<double>(draws)) + 1e-12);
  }

  // minibatch requires sub-components
  NoiseSpec batch{NoiseSpec::Kind::minibatch, 0.0, 2};
  Rng r4(4);
  const ObjectivePtr quad = quadratic_interpolation(3, 2, 1, 2.0);
  CHECK_THROWS_AS(mc_sgd_noisy_step(Eigen::VectorXd::Zero(2), 0, 0.1, *quad, batch, r4),
                  std::invalid_argument);
}

TEST_CASE("mc_sag reduces to gradient descent for one node") {
  const ObjectivePtr quad = quadratic_interpolation(1, 3, 6, 4.0);
  const double L = quad->smoothness();
  McSagState state = mc_sag_init(*quad, Eigen::VectorXd::Zero(3), SagInit::perfect);
  Eigen::VectorXd xg = Eigen::VectorXd::Zero(3), g(3);
  for (int t = 0; t < 100; ++t) {
    const double gamma = mc_sag_step(state, 0, *quad, GammaPolicy::adaptive(L, 1.0));
    CHECK(gamma == doctest::Approx(1.0 / (2.0 * L)));
    quad->gradient(xg, g);
    xg -= gamma * g;
    CHECK((state.x - xg).norm() <= 1e-12 * (1.0 + xg.norm()));
  }
}

TEST_CASE("mc_sag matches the last-visit closed form (perfect init)") {
  const ObjectivePtr obj = sigmoid_loss(10, 6, SigmoidData::homogeneous, 8);
  const MarkovChain chain = chain_lazy_maxdeg(build_cycle(10));
  const double tau_hit = tau_hit_exact(chain);
  const GammaPolicy policy = GammaPolicy::adaptive(obj->smoothness(), tau_hit);

  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(6);
  McSagState state = mc_sag_init(*obj, x0, SagInit::perfect);
  const auto path = sample_trajectory(chain, StartSpec::at(0), 3000, 17);

  std::vector<Eigen::VectorXd> history{x0};  // history[t] = x_t
  std::vector<std::int64_t> d_last(10, 0);
  Eigen::VectorXd g(6);
  for (std::size_t t = 0; t < path.size(); ++t) {
    const int v = path[t];
    const double gamma = mc_sag_step(state, v, *obj, policy);
    d_last[static_cast<std::size_t>(v)] = static_cast<std::int64_t>(t);
    // recompute x_{t+1} from scratch:  x_t - (gamma_t / n) sum_v grad f_v(x_{d_v(t)})
    Eigen::VectorXd update = Eigen::VectorXd::Zero(6);
    for (int u = 0; u < 10; ++u) {
      obj->component_gradient(u, history[static_cast<std::size_t>(d_last[static_cast<std::size_t>(u)])], g);
      update += g;
    }
    const Eigen::VectorXd expected = history.back() - (gamma / 10.0) * update;
    CHECK((state.x - expected).norm() <= 1e-10 * (1.0 + expected.norm()));
    history.push_back(state.x);

    // incremental running average never drifts from the definition
    const Eigen::VectorXd avg = state.h.rowwise().mean();
    CHECK((state.g_bar - avg).norm() <= 1e-10 * (1.0 + avg.norm()));
  }
}

TEST_CASE("mc_sag with iid sampling reproduces reference SAG") {
  const ObjectivePtr obj = sigmoid_loss(8, 5, SigmoidData::homogeneous, 10);
  const double gamma = 0.5 / obj->smoothness();
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(5, 0.3);

  McSagState state = mc_sag_init(*obj, x0, SagInit::perfect);
  oracles::ReferenceSag ref(*obj, x0);
  Rng rng(33);
  for (int t = 0; t < 10000; ++t) {
    const int v = rng.next_int(8);
    mc_sag_step(state, v, *obj, GammaPolicy::constant(gamma));
    ref.step(*obj, v, gamma);
    CHECK((state.x - ref.x).norm() <= 1e-10 * (1.0 + ref.x.norm()));
  }
}

TEST_CASE("adaptive stepsizes and the staleness tracker") {
  CHECK(adaptive_stepsize(2.0, 5.0, 0) == doctest::Approx(1.0 / (2.0 * 2.0 * 5.0)));
  CHECK(adaptive_stepsize(2.0, 5.0, 0, true) == doctest::Approx(1.0 / (4.0 * 2.0 * 5.0)));
  CHECK(adaptive_stepsize(2.0, 5.0, 10) < adaptive_stepsize(2.0, 5.0, 3));
  CHECK_THROWS_AS(adaptive_stepsize(0.0, 5.0, 1), std::invalid_argument);

  // tracked tau equals the brute-force definition along a long run
  const ObjectivePtr obj = quadratic_interpolation(12, 4, 3, 5.0);
  const MarkovChain chain = chain_lazy_maxdeg(build_cycle(12));
  const auto path = sample_trajectory(chain, StartSpec::at(3), 10000, 5);
  McSagState state = mc_sag_init(*obj, Eigen::VectorXd::Zero(4), SagInit::perfect);
  const GammaPolicy policy = GammaPolicy::adaptive(obj->smoothness(), tau_hit_exact(chain));
  std::vector<std::int64_t> d_last(12, 0);
  for (std::size_t t = 0; t < path.size(); ++t) {
    mc_sag_step(state, path[t], *obj, policy);
    d_last[static_cast<std::size_t>(path[t])] = static_cast<std::int64_t>(t);
    std::int64_t tau = 0;
    for (int v = 0; v < 12; ++v)
      tau = std::max(tau, static_cast<std::int64_t>(t) - d_last[static_cast<std::size_t>(v)]);
    CHECK(state.tau == tau);
  }
}

TEST_CASE("gossip rounds") {
  const int n = 6;
  const ObjectivePtr obj = quadratic_interpolation(n, 3, 7, 3.0);

  // W = I decouples the nodes into local gradient descent
  const MarkovChain I = identity_chain(n);
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(3, n);
  Eigen::MatrixXd X_ref = X;
  Eigen::MatrixXd mom = Eigen::MatrixXd::Zero(3, n);
  DsgdOptions opt;
  opt.gamma = 0.05;
  Rng rng(1);
  dsgd_fixed_round(X, mom, I, *obj, opt, rng);
  Eigen::VectorXd g(3);
  for (int v = 0; v < n; ++v) {
    obj->component_gradient(v, X_ref.col(v), g);
    CHECK((X.col(v) - (X_ref.col(v) - 0.05 * g)).norm() <= 1e-12);
  }

  // complete-graph averaging reaches consensus in one round
  const MarkovChain uniform = chain_lazy_maxdeg(build_complete(n));
  X = Eigen::MatrixXd::Random(3, n);
  dsgd_fixed_round(X, mom, uniform, *obj, opt, rng);
  for (int v = 1; v < n; ++v) CHECK((X.col(v) - X.col(0)).norm() <= 1e-12);

  // zero stepsize reduces a round to pure averaging: X P^T, cross-checked
  // against direct matrix powering
  const MarkovChain P = chain_lazy_maxdeg(build_cycle(n));
  X = Eigen::MatrixXd::Random(3, n);
  Eigen::MatrixXd expected = X;
  opt.gamma = 0.0;
  for (int r = 0; r < 5; ++r) dsgd_fixed_round(X, mom, P, *obj, opt, rng);
  Eigen::MatrixXd P5 = Eigen::MatrixXd::Identity(n, n);
  for (int r = 0; r < 5; ++r) P5 = P5 * P.transition();
  expected = expected * P5.transpose();
  CHECK((X - expected).cwiseAbs().maxCoeff() <= 1e-12);

  // randomized gossip preserves the network average up to the single step
  const Graph cyc = build_cycle(n);
  std::vector<std::pair<int, int>> edges;
  for (int v = 0; v < n; ++v)
    for (int w : cyc.neighbors(v))
      if (v < w) edges.emplace_back(v, w);
  X = Eigen::MatrixXd::Random(3, n);
  const Eigen::VectorXd before = X.rowwise().mean();
  opt.gamma = 0.0;
  dsgd_randomized_round(X, edges, *obj, opt, rng);
  CHECK((X.rowwise().mean() - before).norm() <= 1e-12);
}

TEST_CASE("theorem51 stepsize") {
  // zero dissimilarity: the 1/(48 L tau ln T) cap binds
  const double cap = theorem51_stepsize(2.0, 10, 1.0, 0.0, 100);
  CHECK(cap == doctest::Approx(1.0 / (48.0 * 2.0 * 10.0 * std::log(100.0))));
  // noise-dominated regime scales like 1/sqrt(T)
  const double g1 = theorem51_stepsize(2.0, 10, 1e-4, 50.0, 1 << 20);
  const double g2 = theorem51_stepsize(2.0, 10, 1e-4, 50.0, 1 << 22);
  CHECK(g2 < g1);
  CHECK(g1 / g2 == doctest::Approx(2.0).epsilon(0.05));  // sqrt(4) up to the ln factor
  CHECK_THROWS_AS(theorem51_stepsize(-1.0, 10, 1.0, 1.0, 100), std::invalid_argument);
}

TEST_CASE("run: trace shape, determinism, communication accounting") {
  const Graph g = build_complete(2);
  const MarkovChain chain = chain_lazy_maxdeg(g);
  const ObjectivePtr obj = quadratic_interpolation(2, 3, 2, 2.0);

  AlgorithmSpec algo;
  algo.kind = AlgorithmKind::mc_sgd;
  algo.gamma = GammaPolicy::constant(0.1);
  RunInputs in;
  in.chain = &chain;
  in.objective = obj;
  in.x0 = Eigen::VectorXd::Zero(3);
  in.T = 10;
  in.log_every = 1;
  in.seed = 5;

  const Trace a = run(algo, in);
  CHECK(a.records.size() == 11);  // T + 1 records at log_every = 1
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].t == static_cast<std::int64_t>(i));
    CHECK(a.records[i].comms == static_cast<std::int64_t>(i));  // token: comms = t
  }
  const Trace b = run(algo, in);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].f_gap == b.records[i].f_gap);
    CHECK(a.records[i].node == b.records[i].node);
  }

  in.T = 0;
  const Trace empty = run(algo, in);
  CHECK(empty.records.size() == 1);
  CHECK(empty.records[0].t == 0);

  // wait-for-mix pays k communications per gradient step
  algo.kind = AlgorithmKind::mc_sgd_wait_mix;
  algo.wait_k = 7;
  in.T = 5;
  const Trace waited = run(algo, in);
  CHECK(waited.records.back().comms == 35);

  // fixed gossip pays |E| per round, randomized pays one
  algo.kind = AlgorithmKind::dsgd_fixed;
  algo.wait_k = 1;
  const Trace fixed = run(algo, in);
  CHECK(fixed.records.back().comms == 5 * g.edge_count());
  algo.kind = AlgorithmKind::dsgd_randomized;
  const Trace randomized = run(algo, in);
  CHECK(randomized.records.back().comms == 5);
}

TEST_CASE("run: reshuffle visits every component once per epoch") {
  const MarkovChain chain = chain_lazy_maxdeg(build_cycle(7));
  SamplerStream stream(SamplerMode::reshuffle, chain, StartSpec::stationary(), 123);
  for (int epoch = 0; epoch < 20; ++epoch) {
    std::set<int> seen;
    for (int i = 0; i < 7; ++i) seen.insert(stream.next());
    CHECK(seen.size() == 7);
  }
}

TEST_CASE("run: interpolation contraction at gamma = 1/(2L)") {
  const MarkovChain chain = chain_lazy_maxdeg(build_cycle(20));
  const ObjectivePtr obj = quadratic_interpolation(20, 6, 9, 10.0);
  AlgorithmSpec algo;
  algo.kind = AlgorithmKind::mc_sgd;
  const double gamma = 0.5 / obj->smoothness();
  algo.gamma = GammaPolicy::constant(gamma);
  RunInputs in;
  in.chain = &chain;
  in.objective = obj;
  in.x0 = Eigen::VectorXd::Zero(6);
  in.T = 500;
  in.log_every = 500;
  const double b2 = (in.x0 - *obj->minimizer()).squaredNorm();
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    in.seed = seed;
    const Trace tr = run(algo, in);
    const double dist_sq = (tr.x_final - *obj->minimizer()).squaredNorm();
    CHECK(dist_sq <=
          2.0 * std::pow(1.0 - gamma * obj->strong_convexity(), 500.0) * b2 * (1.0 + 1e-9));
  }
}

TEST_CASE("run: two-state noise floor matches the exact AR closed form") {
  // x_{t+1} = (1-gamma) x_t + gamma zeta_t with zeta a telegraph signal of
  // correlation 1-2p; the stationary second moment has an exact closed form
  const MarkovChain chain = chain_two_state(0.05);
  const ObjectivePtr obj = two_point_disagreement();
  const double gamma = 1e-3, p = 0.05;
  AlgorithmSpec algo;
  algo.kind = AlgorithmKind::mc_sgd;
  algo.gamma = GammaPolicy::constant(gamma);
  RunInputs in;
  in.chain = &chain;
  in.objective = obj;
  in.x0 = Eigen::VectorXd::Zero(1);
  in.T = 20000;
  in.log_every = 20000;
  in.f_star_ref = 0.5;
  double mean = 0.0, second = 0.0;
  const int seeds = 400;
  for (int s = 0; s < seeds; ++s) {
    in.seed = static_cast<std::uint64_t>(s);
    const Trace tr = run(algo, in);
    const double xsq = tr.x_final.squaredNorm();
    mean += xsq;
    second += xsq * xsq;
  }
  mean /= seeds;
  const double se = std::sqrt((second / seeds - mean * mean) / seeds);
  const double a = 1.0 - gamma, rho = 1.0 - 2.0 * p;
  const double closed_form = gamma * gamma / (1.0 - a * a) * (1.0 + a * rho) / (1.0 - a * rho);
  CHECK(std::abs(mean - closed_form) <= 3.0 * se);
}

TEST_CASE("run: divergence guard") {
  const MarkovChain chain = chain_lazy_maxdeg(build_cycle(4));
  const ObjectivePtr obj = quadratic_interpolation(4, 2, 1, 10.0);
  AlgorithmSpec algo;
  algo.kind = AlgorithmKind::mc_sgd;
  algo.gamma = GammaPolicy::constant(10.0);  // far above 2/L
  RunInputs in;
  in.chain = &chain;
  in.objective = obj;
  in.x0 = Eigen::VectorXd::Constant(2, 1.0);
  in.T = 100000;
  in.log_every = 100000;
  in.seed = 3;
  CHECK_THROWS_AS(run(algo, in), divergence_error);
}
