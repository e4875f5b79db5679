#include "tokenopt/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tokenopt {

namespace {
constexpr double kDivergenceBound = 1e12;

void check_finite(const Eigen::VectorXd& x, std::int64_t t) {
  if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kDivergenceBound)
    throw divergence_error("iterate diverged (|x| > 1e12 or non-finite)", t);
}
}  // namespace

// ---------------------------------------------------------------------------
// samplers
// ---------------------------------------------------------------------------

SamplerStream::SamplerStream(SamplerMode mode, const MarkovChain& chain, StartSpec start,
                             std::uint64_t seed, int wait_k)
    : mode_(mode), chain_(chain), rng_(seed, /*stream=*/0), k_(wait_k) {
  if (mode_ == SamplerMode::wait_for_mix && k_ < 1)
    throw std::invalid_argument("sampler: wait_for_mix needs k >= 1");
  current_ = start.from_stationary ? draw_stationary(chain_, rng_) : start.node;
  if (current_ < 0 || current_ >= chain_.state_count())
    throw std::invalid_argument("sampler: start node out of range");
}

int SamplerStream::next() {
  switch (mode_) {
    case SamplerMode::markov:
      if (first_) {
        first_ = false;
        return current_;
      }
      current_ = step_once(chain_, current_, rng_);
      return current_;
    case SamplerMode::wait_for_mix:
      for (int s = 0; s < k_; ++s) current_ = step_once(chain_, current_, rng_);
      return current_;
    case SamplerMode::iid:
      return draw_stationary(chain_, rng_);
    case SamplerMode::reshuffle: {
      const int n = chain_.state_count();
      if (pos_ == static_cast<int>(permutation_.size())) {
        permutation_.resize(n);
        for (int i = 0; i < n; ++i) permutation_[i] = i;
        for (int i = n - 1; i > 0; --i) std::swap(permutation_[i], permutation_[rng_.next_int(i + 1)]);
        pos_ = 0;
      }
      return permutation_[pos_++];
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// stepsizes
// ---------------------------------------------------------------------------

double theorem51_stepsize(double L, std::int64_t tau_mix, double F0, double sigma_bar_sq,
                          std::int64_t T) {
  if (!(L > 0.0) || tau_mix < 1 || T < 1 || F0 < 0.0 || sigma_bar_sq < 0.0)
    throw std::invalid_argument("theorem51_stepsize: invalid inputs");
  const double tau_eff = static_cast<double>(tau_mix) * std::max(1.0, std::log(static_cast<double>(T)));
  const double cap = 1.0 / (48.0 * L * tau_eff);
  if (sigma_bar_sq == 0.0) return cap;
  const double noise_term = std::sqrt(F0 / (static_cast<double>(T) * L * tau_eff * sigma_bar_sq));
  return std::min(cap, noise_term);
}

double adaptive_stepsize(double L, double tau_hit, std::int64_t tau_t, bool halved) {
  if (!(L > 0.0) || !(tau_hit > 0.0))
    throw std::invalid_argument("adaptive_stepsize: L and tau_hit must be positive");
  const double c = halved ? 4.0 : 2.0;
  return 1.0 / (c * L * (tau_hit + static_cast<double>(tau_t)));
}

namespace {
double resolve_gamma(const GammaPolicy& policy, std::int64_t tau_t) {
  if (policy.kind == GammaPolicy::Kind::constant) return policy.gamma;
  return adaptive_stepsize(policy.L, policy.tau_hit, tau_t, policy.halved);
}
}  // namespace

// ---------------------------------------------------------------------------
// single steps
// ---------------------------------------------------------------------------

Eigen::VectorXd mc_sgd_step(const Eigen::VectorXd& x, int v, double gamma, const Objective& obj) {
  if (!(gamma > 0.0)) throw std::invalid_argument("mc_sgd_step: gamma must be positive");
  Eigen::VectorXd g(obj.dim());
  obj.component_gradient(v, x, g);
  if (!g.allFinite()) throw divergence_error("mc_sgd_step: non-finite gradient", 0);
  return x - gamma * g;
}

namespace {

// stochastic gradient with local noise, written into g
void noisy_gradient(const Eigen::VectorXd& x, int v, const Objective& obj, const NoiseSpec& noise,
                    Rng& rng, Eigen::VectorXd& g, Eigen::VectorXd& scratch) {
  switch (noise.kind) {
    case NoiseSpec::Kind::none:
      obj.component_gradient(v, x, g);
      return;
    case NoiseSpec::Kind::gaussian:
      obj.component_gradient(v, x, g);
      if (noise.sd > 0.0)
        for (int k = 0; k < g.size(); ++k) g[k] += noise.sd * rng.normal();
      return;
    case NoiseSpec::Kind::minibatch: {
      const int m = obj.subcomponents(v);
      if (m <= 0)
        throw std::invalid_argument("minibatch noise: objective exposes no sub-components");
      const int B = std::min(noise.batch > 0 ? noise.batch : m, m);
      // partial Fisher-Yates over sub-indices
      std::vector<int> idx(m);
      for (int i = 0; i < m; ++i) idx[i] = i;
      g.setZero(obj.dim());
      for (int j = 0; j < B; ++j) {
        std::swap(idx[j], idx[j + rng.next_int(m - j)]);
        obj.subcomponent_gradient(v, idx[j], x, scratch);
        g.noalias() += scratch;
      }
      g /= static_cast<double>(B);
      return;
    }
  }
}

}  // namespace

Eigen::VectorXd mc_sgd_noisy_step(const Eigen::VectorXd& x, int v, double gamma,
                                  const Objective& obj, const NoiseSpec& noise, Rng& rng) {
  if (!(gamma > 0.0)) throw std::invalid_argument("mc_sgd_noisy_step: gamma must be positive");
  Eigen::VectorXd g(obj.dim()), scratch(obj.dim());
  noisy_gradient(x, v, obj, noise, rng, g, scratch);
  if (!g.allFinite()) throw divergence_error("mc_sgd_noisy_step: non-finite gradient", 0);
  return x - gamma * g;
}

// ---------------------------------------------------------------------------
// MC-SAG
// ---------------------------------------------------------------------------

McSagState mc_sag_init(const Objective& obj, const Eigen::VectorXd& x0, SagInit init) {
  McSagState s;
  const int n = obj.components();
  const int d = obj.dim();
  s.x = x0;
  s.h = Eigen::MatrixXd::Zero(d, n);
  s.g_bar = Eigen::VectorXd::Zero(d);
  s.d_last.assign(n, 0);
  if (init == SagInit::perfect) {
    Eigen::VectorXd g(d);
    for (int v = 0; v < n; ++v) {
      obj.component_gradient(v, x0, g);
      s.h.col(v) = g;
      s.g_bar.noalias() += g / n;
    }
  }
  return s;
}

McSagState mc_sag_init_custom(const Objective& obj, const Eigen::VectorXd& x0, Eigen::MatrixXd h) {
  if (h.rows() != obj.dim() || h.cols() != obj.components())
    throw std::invalid_argument("mc_sag_init_custom: h must be dim x n");
  McSagState s;
  s.x = x0;
  s.h = std::move(h);
  s.g_bar = s.h.rowwise().mean();  // enforce g_bar = (1/n) sum_v h_v
  s.d_last.assign(obj.components(), 0);
  return s;
}

double mc_sag_step(McSagState& state, int v, const Objective& obj, const GammaPolicy& policy) {
  const int n = obj.components();
  // arrival at v refreshes its last-visit time before the staleness readout
  state.d_last[static_cast<std::size_t>(v)] = state.t;
  std::int64_t tau = 0;
  for (int u = 0; u < n; ++u) tau = std::max(tau, state.t - state.d_last[static_cast<std::size_t>(u)]);
  state.tau = tau;
  const double gamma = resolve_gamma(policy, tau);

  Eigen::VectorXd g(obj.dim());
  obj.component_gradient(v, state.x, g);
  if (!g.allFinite()) throw divergence_error("mc_sag_step: non-finite gradient", state.t);
  state.g_bar.noalias() += (g - state.h.col(v)) / n;
  state.x.noalias() -= gamma * state.g_bar;
  state.h.col(v) = g;
  state.t += 1;
  state.comms += 1;
  check_finite(state.x, state.t);
  return gamma;
}

// ---------------------------------------------------------------------------
// gossip baselines
// ---------------------------------------------------------------------------

void dsgd_fixed_round(Eigen::MatrixXd& X, Eigen::MatrixXd& momentum_buf, const MarkovChain& W,
                      const Objective& obj, const DsgdOptions& opt, Rng& rng) {
  const int n = obj.components();
  Eigen::MatrixXd G(obj.dim(), n);
  Eigen::VectorXd g(obj.dim()), scratch(obj.dim());
  for (int v = 0; v < n; ++v) {
    noisy_gradient(X.col(v), v, obj, opt.noise, rng, g, scratch);
    G.col(v) = g;
  }
  if (opt.momentum > 0.0) {
    momentum_buf = opt.momentum * momentum_buf + G;
    X = (X - opt.gamma * momentum_buf) * W.transition().transpose();
  } else {
    X = (X - opt.gamma * G) * W.transition().transpose();
  }
}

void dsgd_randomized_round(Eigen::MatrixXd& X, const std::vector<std::pair<int, int>>& edges,
                           const Objective& obj, const DsgdOptions& opt, Rng& rng) {
  const auto [u, w] = edges[rng.next_int(static_cast<int>(edges.size()))];
  const Eigen::VectorXd avg = 0.5 * (X.col(u) + X.col(w));
  X.col(u) = avg;
  X.col(w) = avg;
  const int who = rng.next_int(2) == 0 ? u : w;
  Eigen::VectorXd g(obj.dim()), scratch(obj.dim());
  noisy_gradient(X.col(who), who, obj, opt.noise, rng, g, scratch);
  X.col(who).noalias() -= opt.gamma * g;
}

// ---------------------------------------------------------------------------
// full runs
// ---------------------------------------------------------------------------

namespace {

bool is_token_algorithm(AlgorithmKind k) {
  return k != AlgorithmKind::dsgd_fixed && k != AlgorithmKind::dsgd_randomized;
}

SamplerMode sampler_mode_for(AlgorithmKind k) {
  switch (k) {
    case AlgorithmKind::sag_iid:
    case AlgorithmKind::sgd_iid:
      return SamplerMode::iid;
    case AlgorithmKind::sgd_reshuffle:
      return SamplerMode::reshuffle;
    case AlgorithmKind::mc_sgd_wait_mix:
      return SamplerMode::wait_for_mix;
    default:
      return SamplerMode::markov;
  }
}

std::vector<std::pair<int, int>> edges_of(const MarkovChain& chain) {
  std::vector<std::pair<int, int>> edges;
  const auto& P = chain.transition();
  for (int v = 0; v < chain.state_count(); ++v)
    for (int w = v + 1; w < chain.state_count(); ++w)
      if (P(v, w) > 0.0 || P(w, v) > 0.0) edges.emplace_back(v, w);
  return edges;
}

}  // namespace

Trace run(const AlgorithmSpec& algo, const RunInputs& in) {
  if (in.chain == nullptr || !in.objective) throw std::invalid_argument("run: missing inputs");
  if (in.T < 0 || in.log_every < 1) throw std::invalid_argument("run: T >= 0, log_every >= 1");
  const Objective& obj = *in.objective;
  if (in.x0.size() != obj.dim()) throw std::invalid_argument("run: x0 has wrong dimension");

  Trace trace;
  trace.seed = in.seed;
  trace.f_star_ref = in.f_star_ref;
  trace.f_star_provenance = in.f_star_provenance;
  trace.x_final = in.x0;

  Eigen::VectorXd probe(obj.dim());
  const auto log_record = [&](std::int64_t t, std::int64_t comms, int node,
                              const Eigen::VectorXd& x) {
    const double f = obj.value(x);
    if (!std::isfinite(f)) throw divergence_error("run: non-finite objective value", t);
    obj.gradient(x, probe);
    trace.records.push_back({t, comms, node, f - in.f_star_ref, probe.squaredNorm()});
  };

  if (is_token_algorithm(algo.kind)) {
    SamplerStream sampler(sampler_mode_for(algo.kind), *in.chain, in.start, in.seed, algo.wait_k);
    Rng noise_rng(in.seed, /*stream=*/1);
    log_record(0, 0, -1, in.x0);

    if (algo.kind == AlgorithmKind::mc_sag || algo.kind == AlgorithmKind::sag_iid) {
      McSagState state = mc_sag_init(obj, in.x0, algo.sag_init);
      for (std::int64_t t = 0; t < in.T; ++t) {
        const int v = sampler.next();
        mc_sag_step(state, v, obj, algo.gamma);
        if ((t + 1) % in.log_every == 0 || t + 1 == in.T)
          log_record(t + 1, state.comms, v, state.x);
      }
      trace.x_final = state.x;
      return trace;
    }

    Eigen::VectorXd x = in.x0;
    Eigen::VectorXd g(obj.dim()), scratch(obj.dim());
    std::int64_t comms = 0;
    const bool noisy = algo.kind == AlgorithmKind::mc_sgd_noisy;
    for (std::int64_t t = 0; t < in.T; ++t) {
      const int v = sampler.next();
      const double gamma = resolve_gamma(algo.gamma, 0);
      if (noisy)
        noisy_gradient(x, v, obj, algo.noise, noise_rng, g, scratch);
      else
        obj.component_gradient(v, x, g);
      if (!g.allFinite()) throw divergence_error("run: non-finite gradient", t);
      x.noalias() -= gamma * g;
      comms += sampler.comm_cost();
      check_finite(x, t + 1);
      if ((t + 1) % in.log_every == 0 || t + 1 == in.T) log_record(t + 1, comms, v, x);
    }
    trace.x_final = x;
    return trace;
  }

  // gossip: T counts rounds; columns of X are the per-node iterates
  const int n = obj.components();
  if (in.chain->state_count() != n)
    throw std::invalid_argument("run: chain and objective disagree on n");
  Eigen::MatrixXd X(obj.dim(), n);
  for (int v = 0; v < n; ++v) X.col(v) = in.x0;
  Eigen::MatrixXd momentum_buf = Eigen::MatrixXd::Zero(obj.dim(), n);
  DsgdOptions opt;
  opt.gamma = resolve_gamma(algo.gamma, 0);
  opt.momentum = algo.momentum;
  opt.noise = algo.noise;
  Rng rng(in.seed, /*stream=*/1);
  const auto edges = edges_of(*in.chain);
  const std::int64_t comm_per_round =
      algo.kind == AlgorithmKind::dsgd_fixed ? static_cast<std::int64_t>(edges.size()) : 1;

  Eigen::VectorXd xbar = X.rowwise().mean();
  log_record(0, 0, -1, xbar);
  for (std::int64_t t = 0; t < in.T; ++t) {
    if (algo.kind == AlgorithmKind::dsgd_fixed)
      dsgd_fixed_round(X, momentum_buf, *in.chain, obj, opt, rng);
    else
      dsgd_randomized_round(X, edges, obj, opt, rng);
    if (!X.allFinite() || X.cwiseAbs().maxCoeff() > kDivergenceBound)
      throw divergence_error("run: gossip iterates diverged", t + 1);
    if ((t + 1) % in.log_every == 0 || t + 1 == in.T) {
      xbar = X.rowwise().mean();
      log_record(t + 1, (t + 1) * comm_per_round, -1, xbar);
    }
  }
  trace.x_final = X.rowwise().mean();
  return trace;
}

}  // namespace tokenopt
