#include "tokenopt/markov_chain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tokenopt/rng.hpp"

namespace tokenopt {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kStationaryTol = 1e-10;
constexpr double kReversibleTol = 1e-10;

void validate_stochastic(const Eigen::MatrixXd& P) {
  if (P.rows() != P.cols() || P.rows() < 1)
    throw std::invalid_argument("markov chain: transition matrix must be square");
  if ((P.array() < 0.0).any())
    throw std::invalid_argument("markov chain: negative transition probability");
  for (Eigen::Index v = 0; v < P.rows(); ++v)
    if (std::abs(P.row(v).sum() - 1.0) > kRowSumTol)
      throw std::invalid_argument("markov chain: row does not sum to 1");
}

bool detailed_balance(const Eigen::MatrixXd& P, const Eigen::VectorXd& pi) {
  const Eigen::Index n = P.rows();
  for (Eigen::Index v = 0; v < n; ++v)
    for (Eigen::Index w = v + 1; w < n; ++w)
      if (std::abs(pi[v] * P(v, w) - pi[w] * P(w, v)) > kReversibleTol) return false;
  return true;
}

double tv_from_pi(const Eigen::MatrixXd& Pt, const Eigen::VectorXd& pi) {
  double worst = 0.0;
  for (Eigen::Index v = 0; v < Pt.rows(); ++v)
    worst = std::max(worst, 0.5 * (Pt.row(v).transpose() - pi).cwiseAbs().sum());
  return worst;
}

}  // namespace

MarkovChain::MarkovChain(Eigen::MatrixXd P, Eigen::VectorXd pi)
    : P_(std::move(P)), pi_(std::move(pi)) {
  if ((pi_.array() < -1e-14).any() || std::abs(pi_.sum() - 1.0) > 1e-10)
    throw std::invalid_argument("markov chain: stationary vector is not a distribution");
  pi_ = pi_.cwiseMax(0.0);
  pi_ /= pi_.sum();
  const double residual = ((pi_.transpose() * P_).transpose() - pi_).cwiseAbs().maxCoeff();
  if (residual > kStationaryTol)
    throw std::invalid_argument("markov chain: pi P = pi violated beyond 1e-10");
  reversible_ = detailed_balance(P_, pi_);
  cdf_ = P_;
  for (Eigen::Index v = 0; v < P_.rows(); ++v)
    for (Eigen::Index w = 1; w < P_.cols(); ++w) cdf_(v, w) += cdf_(v, w - 1);
}

MarkovChain MarkovChain::from_matrix(Eigen::MatrixXd P) {
  validate_stochastic(P);
  Eigen::VectorXd pi = stationary_distribution(P);
  return MarkovChain(std::move(P), std::move(pi));
}

MarkovChain MarkovChain::from_matrix(Eigen::MatrixXd P, Eigen::VectorXd pi) {
  validate_stochastic(P);
  return MarkovChain(std::move(P), std::move(pi));
}

MarkovChain chain_simple_rw(const Graph& g) {
  const int n = g.node_count();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd pi(n);
  const double two_e = 2.0 * static_cast<double>(g.edge_count());
  for (int v = 0; v < n; ++v) {
    const double d = g.degree(v);
    if (d == 0) throw std::invalid_argument("chain_simple_rw: isolated node");
    for (int w : g.neighbors(v)) P(v, w) = 1.0 / d;
    pi[v] = d / two_e;
  }
  return MarkovChain::from_matrix(std::move(P), std::move(pi));
}

MarkovChain chain_lazy_maxdeg(const Graph& g) {
  const int n = g.node_count();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  for (int v = 0; v < n; ++v) {
    const double p = 1.0 / (g.degree(v) + 1.0);
    P(v, v) = p;
    for (int w : g.neighbors(v)) P(v, w) = p;
  }
  return MarkovChain::from_matrix(std::move(P));
}

MarkovChain chain_metropolis_uniform(const Graph& g) {
  const int n = g.node_count();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  for (int v = 0; v < n; ++v) {
    double off = 0.0;
    for (int w : g.neighbors(v)) {
      P(v, w) = std::min(1.0 / g.degree(v), 1.0 / g.degree(w));
      off += P(v, w);
    }
    P(v, v) = 1.0 - off;
  }
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / n);
  return MarkovChain::from_matrix(std::move(P), std::move(pi));
}

MarkovChain chain_two_state(double p) {
  if (!(p > 0.0) || !(p < 1.0))
    throw std::invalid_argument("chain_two_state: p must lie in (0,1)");
  Eigen::MatrixXd P(2, 2);
  P << 1.0 - p, p, p, 1.0 - p;
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(2, 0.5);
  return MarkovChain::from_matrix(std::move(P), std::move(pi));
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& P) {
  const Eigen::Index n = P.rows();
  if (n == 1) return Eigen::VectorXd::Ones(1);
  // solve pi (P - I) = 0 with the normalization row sum(pi) = 1
  Eigen::MatrixXd A = P.transpose() - Eigen::MatrixXd::Identity(n, n);
  A.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs[n - 1] = 1.0;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  Eigen::VectorXd pi = lu.solve(rhs);
  const double residual = ((pi.transpose() * P).transpose() - pi).cwiseAbs().maxCoeff();
  if (!pi.allFinite() || residual > 1e-12 || pi.minCoeff() < -1e-12)
    throw std::runtime_error("stationary_distribution: solve failed (reducible chain?)");
  pi = pi.cwiseMax(0.0);
  pi /= pi.sum();
  return pi;
}

std::int64_t mixing_time_exact(const MarkovChain& chain, double eps, std::int64_t cap) {
  if (!(eps > 0.0)) throw std::invalid_argument("mixing_time_exact: eps must be positive");
  const Eigen::VectorXd& pi = chain.stationary();
  // d(t) = max_v d_TV(P^t(v,.), pi) is non-increasing in t, so we can bracket
  // by repeated squaring and then binary-search with cached powers.
  std::vector<Eigen::MatrixXd> powers;  // powers[k] = P^(2^k)
  powers.push_back(chain.transition());
  if (tv_from_pi(powers[0], pi) <= eps) return 1;
  std::int64_t t = 1;
  while (true) {
    if (2 * t > cap) throw mixing_cap_error("mixing_time_exact: cap exceeded (chain may be periodic)");
    powers.push_back(powers.back() * powers.back());
    t *= 2;
    if (tv_from_pi(powers.back(), pi) <= eps) break;
  }
  // invariant: d(lo) > eps, d(lo + remaining bits...) explored downward
  std::int64_t lo = t / 2;
  Eigen::MatrixXd M = powers[powers.size() - 2];
  for (int k = static_cast<int>(powers.size()) - 3; k >= 0; --k) {
    Eigen::MatrixXd candidate = M * powers[k];
    if (tv_from_pi(candidate, pi) > eps) {
      lo += (std::int64_t{1} << k);
      M = std::move(candidate);
    }
  }
  return lo + 1;
}

Eigen::MatrixXd hitting_times_exact(const MarkovChain& chain) {
  const Eigen::Index n = chain.state_count();
  const Eigen::VectorXd& pi = chain.stationary();
  if ((pi.array() <= 0.0).any())
    throw std::runtime_error("hitting_times_exact: chain is not irreducible");
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - chain.transition();
  A.noalias() += Eigen::VectorXd::Ones(n) * pi.transpose();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  Eigen::MatrixXd Z = lu.solve(Eigen::MatrixXd::Identity(n, n));
  if (!Z.allFinite()) throw std::runtime_error("hitting_times_exact: singular fundamental matrix");
  Eigen::MatrixXd H(n, n);
  for (Eigen::Index w = 0; w < n; ++w) {
    for (Eigen::Index v = 0; v < n; ++v) H(v, w) = (Z(w, w) - Z(v, w)) / pi[w];
    H(w, w) = 1.0 / pi[w];  // expected return time
  }
  return H;
}

double tau_hit_exact(const MarkovChain& chain) { return hitting_times_exact(chain).maxCoeff(); }

double relaxation_time(const MarkovChain& chain) {
  if (!chain.reversible()) return std::numeric_limits<double>::quiet_NaN();
  const Eigen::Index n = chain.state_count();
  if (n == 1) return 1.0;
  const Eigen::VectorXd sqrt_pi = chain.stationary().cwiseSqrt();
  // D^{1/2} P D^{-1/2} is symmetric for reversible P
  Eigen::MatrixXd S = sqrt_pi.asDiagonal() * chain.transition();
  S = S * sqrt_pi.cwiseInverse().asDiagonal();
  S = 0.5 * (S + S.transpose());  // scrub asymmetry from roundoff
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
  // drop the eigenvalue 1 (last after sorting), take largest remaining modulus
  double second = std::abs(ev[0]);
  for (Eigen::Index i = 0; i + 1 < n; ++i) second = std::max(second, std::abs(ev[i]));
  const double gap = 1.0 - second;
  if (gap <= 1e-14) return std::numeric_limits<double>::infinity();
  return 1.0 / gap;
}

int step_once(const MarkovChain& chain, int v, Rng& rng) {
  const double u = rng.uniform01();
  const auto& cdf = chain.row_cdf();
  const int n = chain.state_count();
  int lo = 0, hi = n - 1;
  while (lo < hi) {
    const int mid = (lo + hi) / 2;
    if (cdf(v, mid) > u)
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

int draw_stationary(const MarkovChain& chain, Rng& rng) {
  const double u = rng.uniform01();
  const Eigen::VectorXd& pi = chain.stationary();
  double acc = 0.0;
  for (int v = 0; v + 1 < chain.state_count(); ++v) {
    acc += pi[v];
    if (u < acc) return v;
  }
  return chain.state_count() - 1;
}

std::vector<int> sample_trajectory(const MarkovChain& chain, StartSpec start, std::int64_t T,
                                   std::uint64_t seed) {
  if (T < 1) throw std::invalid_argument("sample_trajectory: T must be >= 1");
  Rng rng(seed);
  std::vector<int> path(static_cast<std::size_t>(T));
  int v = start.from_stationary ? draw_stationary(chain, rng) : start.node;
  if (v < 0 || v >= chain.state_count())
    throw std::invalid_argument("sample_trajectory: start node out of range");
  path[0] = v;
  for (std::int64_t t = 1; t < T; ++t) {
    v = step_once(chain, v, rng);
    path[static_cast<std::size_t>(t)] = v;
  }
  return path;
}

namespace {

// mean/sd of the cover time (all states visited at times >= 1) from one start
std::pair<double, double> cover_from_start(const MarkovChain& chain, int v0, int reps, Rng& rng,
                                           std::int64_t step_cap) {
  const int n = chain.state_count();
  std::vector<std::int64_t> stamp(n, -1);
  double sum = 0.0, sum_sq = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    int remaining = n;
    int v = v0;
    std::int64_t t = 0;
    const std::int64_t generation = static_cast<std::int64_t>(rep);
    while (remaining > 0) {
      if (t >= step_cap) throw std::runtime_error("cover_time_mc: trajectory cap exceeded");
      v = step_once(chain, v, rng);
      ++t;
      if (stamp[v] != generation) {
        stamp[v] = generation;
        --remaining;
      }
    }
    sum += static_cast<double>(t);
    sum_sq += static_cast<double>(t) * static_cast<double>(t);
  }
  const double mean = sum / reps;
  const double var = std::max(0.0, sum_sq / reps - mean * mean) * reps / std::max(1, reps - 1);
  return {mean, std::sqrt(var)};
}

}  // namespace

CoverEstimate cover_time_mc(const MarkovChain& chain, CoverStart policy, int v0, int reps,
                            std::uint64_t seed, std::int64_t step_cap) {
  if (reps < 100) throw std::invalid_argument("cover_time_mc: reps must be >= 100");
  CoverEstimate best;
  if (policy == CoverStart::fixed) {
    Rng rng(seed, static_cast<std::uint64_t>(v0));
    auto [mean, sd] = cover_from_start(chain, v0, reps, rng, step_cap);
    return {mean, 1.96 * sd / std::sqrt(static_cast<double>(reps)), v0};
  }
  for (int v = 0; v < chain.state_count(); ++v) {
    Rng rng(seed, static_cast<std::uint64_t>(v));
    auto [mean, sd] = cover_from_start(chain, v, reps, rng, step_cap);
    if (mean >= best.mean) {
      best.mean = mean;
      best.half_width = 1.96 * sd / std::sqrt(static_cast<double>(reps));
      best.start = v;
    }
  }
  return best;
}

double harmonic_number(int k) {
  double h = 0.0;
  for (int i = 1; i <= k; ++i) h += 1.0 / i;
  return h;
}

ChainTimes chain_times(const MarkovChain& chain, int mc_reps, std::uint64_t seed) {
  ChainTimes out;
  out.tau_mix_quarter = mixing_time_exact(chain, 0.25);
  out.tau_mix = mixing_time_exact(chain, chain.pi_min() / 2.0);
  out.tau_rel = relaxation_time(chain);
  out.tau_hit = tau_hit_exact(chain);
  const CoverEstimate cover = cover_time_mc(chain, CoverStart::worst, 0, mc_reps, seed);
  out.tau_cov_mc = cover.mean;
  out.tau_cov_half_width = cover.half_width;
  out.tau_cov_matthews = harmonic_number(chain.state_count() - 1) * out.tau_hit;
  return out;
}

}  // namespace tokenopt
