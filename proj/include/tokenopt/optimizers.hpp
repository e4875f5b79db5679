#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tokenopt/markov_chain.hpp"
#include "tokenopt/objective.hpp"
#include "tokenopt/rng.hpp"

namespace tokenopt {

// thrown when an iterate leaves the trust region (|x|_inf > 1e12) or a
// non-finite value appears; signals a stepsize violating gamma <= 1/(2L)
struct divergence_error : std::runtime_error {
  divergence_error(const std::string& what, std::int64_t at_step)
      : std::runtime_error(what), step(at_step) {}
  std::int64_t step;
};

// ---------------------------------------------------------------------------
// samplers
// ---------------------------------------------------------------------------

enum class SamplerMode { markov, iid, reshuffle, wait_for_mix };

// Emits the component index driving each optimizer step. Deterministic given
// (mode, chain, start, seed). wait_for_mix(k) emits every k-th state of the
// walk, costing k token moves per emitted sample.
class SamplerStream {
 public:
  SamplerStream(SamplerMode mode, const MarkovChain& chain, StartSpec start, std::uint64_t seed,
                int wait_k = 1);

  int next();
  std::int64_t comm_cost() const { return mode_ == SamplerMode::wait_for_mix ? k_ : 1; }

 private:
  SamplerMode mode_;
  const MarkovChain& chain_;
  Rng rng_;
  int k_ = 1;
  int current_ = 0;
  bool first_ = true;
  std::vector<int> permutation_;
  int pos_ = 0;
};

// ---------------------------------------------------------------------------
// stepsizes
// ---------------------------------------------------------------------------

// Horizon-dependent constant stepsize from the MC-SGD analysis:
// gamma = min(1/(48 L tau), sqrt(F0/(T L tau sigma_bar_sq))) with
// tau = tau_mix * max(ln T, 1).
double theorem51_stepsize(double L, std::int64_t tau_mix, double F0, double sigma_bar_sq,
                          std::int64_t T);

// Adaptive policy gamma_t = 1/(2L(tau_hit + tau_t)); the arbitrary-init
// variant halves it to 1/(4L(tau_hit + tau_t)).
double adaptive_stepsize(double L, double tau_hit, std::int64_t tau_t, bool halved = false);

struct GammaPolicy {
  enum class Kind { constant, adaptive_eq7 };
  Kind kind = Kind::constant;
  double gamma = 0.0;     // constant
  double L = 0.0;         // adaptive
  double tau_hit = 0.0;   // adaptive
  bool halved = false;    // adaptive, arbitrary-init variant

  static GammaPolicy constant(double g) { return {Kind::constant, g, 0.0, 0.0, false}; }
  static GammaPolicy adaptive(double L, double tau_hit, bool halved = false) {
    return {Kind::adaptive_eq7, 0.0, L, tau_hit, halved};
  }
};

// ---------------------------------------------------------------------------
// single steps
// ---------------------------------------------------------------------------

struct NoiseSpec {
  enum class Kind { none, gaussian, minibatch };
  Kind kind = Kind::none;
  double sd = 0.0;
  int batch = 0;
};

Eigen::VectorXd mc_sgd_step(const Eigen::VectorXd& x, int v, double gamma, const Objective& obj);

// g_t = grad f_v(x) + eta (gaussian, eta ~ N(0, sd^2 I)) or the mean over a
// uniformly sampled batch of sub-component gradients.
Eigen::VectorXd mc_sgd_noisy_step(const Eigen::VectorXd& x, int v, double gamma,
                                  const Objective& obj, const NoiseSpec& noise, Rng& rng);

// ---------------------------------------------------------------------------
// MC-SAG
// ---------------------------------------------------------------------------

enum class SagInit { perfect, zero };

struct McSagState {
  Eigen::VectorXd x;
  Eigen::MatrixXd h;  // dim x n, column v holds h_v
  Eigen::VectorXd g_bar;
  std::vector<std::int64_t> d_last;  // last visit time, 0 if unvisited
  std::int64_t tau = 0;              // max_v (t - d_last[v])
  std::int64_t t = 0;
  std::int64_t comms = 0;
};

McSagState mc_sag_init(const Objective& obj, const Eigen::VectorXd& x0, SagInit init);
// arbitrary stored gradients; the running average is set to their mean
McSagState mc_sag_init_custom(const Objective& obj, const Eigen::VectorXd& x0, Eigen::MatrixXd h);

// One step of the token SAG recursion at node v: compute grad f_v(x_t),
// fold it into the running average, descend along the updated average, store
// the gradient, advance the counters. Returns the stepsize used.
double mc_sag_step(McSagState& state, int v, const Objective& obj, const GammaPolicy& policy);

// ---------------------------------------------------------------------------
// gossip baselines
// ---------------------------------------------------------------------------

struct DsgdOptions {
  double gamma = 0.0;
  double momentum = 0.0;  // heavy-ball knob, default off
  NoiseSpec noise;
};

// synchronous round with fixed mixing matrix W: X <- (X - gamma G) W^T
// (column v of X is node v's iterate); every edge communicates
void dsgd_fixed_round(Eigen::MatrixXd& X, Eigen::MatrixXd& momentum_buf, const MarkovChain& W,
                      const Objective& obj, const DsgdOptions& opt, Rng& rng);

// randomized gossip: one uniform edge averages its endpoints, then one of the
// two endpoints takes a local gradient step; one communication
void dsgd_randomized_round(Eigen::MatrixXd& X, const std::vector<std::pair<int, int>>& edges,
                           const Objective& obj, const DsgdOptions& opt, Rng& rng);

// ---------------------------------------------------------------------------
// full runs
// ---------------------------------------------------------------------------

enum class AlgorithmKind {
  mc_sgd,
  mc_sgd_noisy,
  mc_sag,
  sag_iid,
  sgd_iid,
  sgd_reshuffle,
  mc_sgd_wait_mix,
  dsgd_fixed,
  dsgd_randomized
};

struct AlgorithmSpec {
  AlgorithmKind kind = AlgorithmKind::mc_sgd;
  GammaPolicy gamma;
  NoiseSpec noise;
  SagInit sag_init = SagInit::perfect;
  double momentum = 0.0;
  int wait_k = 1;
};

struct TraceRecord {
  std::int64_t t = 0;
  std::int64_t comms = 0;
  int node = -1;
  double f_gap = 0.0;
  double grad_norm_sq = 0.0;
};

struct Trace {
  std::vector<TraceRecord> records;
  Eigen::VectorXd x_final;  // final iterate (network average for gossip)
  double f_star_ref = 0.0;
  std::string f_star_provenance = "none";  // exact | estimated | none
  std::uint64_t seed = 0;
};

struct RunInputs {
  const MarkovChain* chain = nullptr;
  ObjectivePtr objective;
  Eigen::VectorXd x0;
  StartSpec start = StartSpec::stationary();
  std::int64_t T = 0;
  std::int64_t log_every = 1;
  std::uint64_t seed = 0;
  double f_star_ref = 0.0;
  std::string f_star_provenance = "none";
};

// Executes T steps (token algorithms) or T rounds (gossip), logging every
// log_every steps plus the initial and final iterates. For gossip the logged
// iterate is the network average. Fully deterministic given its inputs.
Trace run(const AlgorithmSpec& algo, const RunInputs& in);

}  // namespace tokenopt
