#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

namespace tokenopt {

// Node-indexed differentiable objective f(x) = sum_v weight_v f_v(x) with
// known smoothness constant L and strong-convexity/PL constant mu (0 if
// none). Immutable; gradient evaluation is pure and reentrant.
class Objective {
 public:
  virtual ~Objective() = default;

  int components() const { return n_; }
  int dim() const { return dim_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  double smoothness() const { return L_; }
  double strong_convexity() const { return mu_; }
  const std::optional<Eigen::VectorXd>& minimizer() const { return x_star_; }
  const std::optional<double>& minimum_value() const { return f_star_; }

  virtual double component_value(int v, const Eigen::VectorXd& x) const = 0;
  virtual void component_gradient(int v, const Eigen::VectorXd& x, Eigen::VectorXd& out) const = 0;

  // local samples per node (minibatch noise); 0 means no sub-structure
  virtual int subcomponents(int /*v*/) const { return 0; }
  virtual void subcomponent_gradient(int /*v*/, int /*i*/, const Eigen::VectorXd& /*x*/,
                                     Eigen::VectorXd& /*out*/) const;

  // full objective and gradient; the single definition point for f
  double value(const Eigen::VectorXd& x) const;
  void gradient(const Eigen::VectorXd& x, Eigen::VectorXd& out) const;
  double gradient_norm_sq(const Eigen::VectorXd& x) const;

 protected:
  Objective(int n, int dim, Eigen::VectorXd weights, double L, double mu)
      : n_(n), dim_(dim), weights_(std::move(weights)), L_(L), mu_(mu) {}
  Objective(int n, int dim, double L, double mu)
      : Objective(n, dim, Eigen::VectorXd::Constant(n, 1.0 / n), L, mu) {}

  void set_minimizer(Eigen::VectorXd x_star, double f_star) {
    x_star_ = std::move(x_star);
    f_star_ = f_star;
  }
  void set_minimum_value(double f_star) { f_star_ = f_star; }

 private:
  int n_;
  int dim_;
  Eigen::VectorXd weights_;
  double L_;
  double mu_;
  std::optional<Eigen::VectorXd> x_star_;
  std::optional<double> f_star_;
};

using ObjectivePtr = std::shared_ptr<const Objective>;

enum class SigmoidData { homogeneous, two_hot_heterogeneous };

// f_v(x) = (1/m) sum_i (sigma(x^T a_{v,i}) - b_{v,i})^2 / 2 with a ~ N(0,I),
// b ~ U[0,1]. Two-hot mode: only nodes 0 and n/2 carry data, scaled by n/2 so
// the network average equals the mean of the two active losses.
ObjectivePtr sigmoid_loss(int n, int dim, SigmoidData mode, std::uint64_t seed,
                          int samples_per_node = 1);

// f_v(x) = (x - x*)^T A_v (x - x*) / 2 with a shared minimizer x* and A_v
// spd, eigenvalues in [1, condition]. Interpolation regime: sigma_star = 0.
ObjectivePtr quadratic_interpolation(int n, int dim, std::uint64_t seed, double condition);

struct QuadraticHetOptions {
  double condition = 10.0;
  double spread = 1.0;           // scale of per-node minimizer offsets
  bool shared_matrix = false;    // one Hessian for all components
  bool linear_spectrum = false;  // eigenvalues linearly spaced (default log)
};

// Per-node quadratics f_v(x) = (x - c_v)^T A_v (x - c_v) / 2 with distinct
// centers, so gradient dissimilarities are nonzero; x* and f* are solved
// exactly at construction.
ObjectivePtr quadratic_heterogeneous(int n, int dim, std::uint64_t seed,
                                     const QuadraticHetOptions& options);

// n = 2, dim = 1: f_0 = (x-1)^2/2, f_1 = (x+1)^2/2; x* = 0, sigma_star^2 = 1.
ObjectivePtr two_point_disagreement();

// Split chain-structured quadratic whose coordinates can only be discovered
// by alternating visits to the two assigned nodes; dimension 2K+1.
ObjectivePtr worst_case_chain(int K, double alpha, double b, int node_v, int node_w, int n);

struct DissimilarityStats {
  double sigma_bar_sq = 0.0;   // E_{v~weights} sigma_v^2 (empirical lower estimate)
  double sigma_max_sq = 0.0;   // max_v sigma_v^2 (empirical lower estimate)
  double sigma_star_sq = 0.0;  // max_v ||grad f_v(x_ref)||^2, exact at x_ref
};

DissimilarityStats dissimilarity_stats(const Objective& obj, const Eigen::VectorXd& x_ref,
                                       int sample_points, std::uint64_t seed);

// Full-gradient descent with stepsize 1/L from x0 and `restarts` random
// restarts, keeping the best final value. Used when no analytic minimum is
// available (reported as estimated in trace metadata).
double estimate_f_star(const Objective& obj, const Eigen::VectorXd& x0, std::int64_t steps,
                       int restarts, std::uint64_t seed);

}  // namespace tokenopt
