#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "tokenopt/graph.hpp"

namespace tokenopt {

// thrown when a chain fails to reach the target total-variation distance
// within the iteration cap (periodic or reducible input)
struct mixing_cap_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Row-stochastic transition matrix with its stationary distribution.
// Off-diagonal support defines a random walk on an undirected graph.
// Immutable after construction.
class MarkovChain {
 public:
  // stationary distribution computed by a dense solve of pi P = pi
  static MarkovChain from_matrix(Eigen::MatrixXd P);
  // exact stationary distribution supplied by the builder (verified)
  static MarkovChain from_matrix(Eigen::MatrixXd P, Eigen::VectorXd pi);

  int state_count() const { return static_cast<int>(P_.rows()); }
  const Eigen::MatrixXd& transition() const { return P_; }
  const Eigen::VectorXd& stationary() const { return pi_; }
  bool reversible() const { return reversible_; }
  double pi_min() const { return pi_.minCoeff(); }

  // per-row cumulative sums, used for inverse-CDF sampling
  const Eigen::MatrixXd& row_cdf() const { return cdf_; }

 private:
  MarkovChain(Eigen::MatrixXd P, Eigen::VectorXd pi);
  Eigen::MatrixXd P_;
  Eigen::VectorXd pi_;
  Eigen::MatrixXd cdf_;
  bool reversible_ = false;
};

// P_{v,w} = 1/deg(v) for w ~ v; pi_v = deg(v)/(2|E|); reversible.
MarkovChain chain_simple_rw(const Graph& g);

// P_{v,w} = 1/(deg(v)+1) for w = v or w ~ v ("max-degree lazy" token walk);
// stationary distribution computed numerically.
MarkovChain chain_lazy_maxdeg(const Graph& g);

// Metropolis-Hastings correction of the simple walk targeting uniform pi:
// P_{v,w} = min(1/deg(v), 1/deg(w)) for w ~ v, remainder on the diagonal.
MarkovChain chain_metropolis_uniform(const Graph& g);

// two states with cross probability p: p01 = p10 = p, p00 = p11 = 1-p
MarkovChain chain_two_state(double p);

// Unique stochastic left fixed vector of an irreducible P (dense solve,
// residual verified to 1e-12).
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& P);

// Smallest t >= 1 with max over deterministic starts v of
// d_TV(P^t(v,.), pi) <= eps. Point-mass starts dominate all mixtures by
// convexity of total variation. Throws mixing_cap_error beyond `cap`.
std::int64_t mixing_time_exact(const MarkovChain& chain, double eps,
                               std::int64_t cap = 10'000'000);

// Entry (v,w) = E[tau_w | v_0 = v] with tau_w = inf{t >= 1 : v_t = w}, so the
// diagonal holds expected return times. Computed from the fundamental matrix
// Z = (I - P + 1 pi^T)^{-1}.
Eigen::MatrixXd hitting_times_exact(const MarkovChain& chain);

// max over ordered pairs (v,w), return pairs included
double tau_hit_exact(const MarkovChain& chain);

// 1/lambda_P for reversible chains (absolute spectral gap); +inf when the
// gap closes, NaN for non-reversible chains.
double relaxation_time(const MarkovChain& chain);

struct CoverEstimate {
  double mean = 0.0;
  double half_width = 0.0;  // 1.96 sd / sqrt(reps) for the reported start
  int start = 0;
};

enum class CoverStart { worst, fixed };

// Monte-Carlo mean of the first time all states have been visited at times
// t >= 1 (the start itself must be revisited). CoverStart::worst maximizes
// the mean over starting states.
CoverEstimate cover_time_mc(const MarkovChain& chain, CoverStart policy, int v0, int reps,
                            std::uint64_t seed, std::int64_t step_cap = 100'000'000);

struct StartSpec {
  bool from_stationary = true;
  int node = 0;
  static StartSpec stationary() { return {true, 0}; }
  static StartSpec at(int v) { return {false, v}; }
};

// v_0 per the start spec, then v_{t+1} ~ P(v_t, .) by inverse CDF on the
// seeded generator; returns v_0..v_{T-1}.
std::vector<int> sample_trajectory(const MarkovChain& chain, StartSpec start, std::int64_t T,
                                   std::uint64_t seed);

// one step of the walk, shared by all samplers
int step_once(const MarkovChain& chain, int v, class Rng& rng);
int draw_stationary(const MarkovChain& chain, class Rng& rng);

struct ChainTimes {
  std::int64_t tau_mix_quarter = 0;  // tau_mix(1/4)
  std::int64_t tau_mix = 0;          // tau_mix(pi_min/2), the paper's convention
  double tau_rel = 0.0;              // 1/lambda_P, reversible chains only (else NaN)
  double tau_hit = 0.0;
  double tau_cov_mc = 0.0;
  double tau_cov_half_width = 0.0;
  double tau_cov_matthews = 0.0;  // H_{n-1} * tau_hit
};

ChainTimes chain_times(const MarkovChain& chain, int mc_reps, std::uint64_t seed);

double harmonic_number(int k);

}  // namespace tokenopt
