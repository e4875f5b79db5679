#include "tokenopt/objective.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "tokenopt/rng.hpp"

namespace tokenopt {

void Objective::subcomponent_gradient(int, int, const Eigen::VectorXd&, Eigen::VectorXd&) const {
  throw std::logic_error("objective: no sub-components exposed");
}

double Objective::value(const Eigen::VectorXd& x) const {
  double f = 0.0;
  for (int v = 0; v < n_; ++v) f += weights_[v] * component_value(v, x);
  return f;
}

void Objective::gradient(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
  out.setZero(dim_);
  Eigen::VectorXd g(dim_);
  for (int v = 0; v < n_; ++v) {
    component_gradient(v, x, g);
    out.noalias() += weights_[v] * g;
  }
}

double Objective::gradient_norm_sq(const Eigen::VectorXd& x) const {
  Eigen::VectorXd g(dim_);
  gradient(x, g);
  return g.squaredNorm();
}

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double logit(double b) { return std::log(b / (1.0 - b)); }

// ---------------------------------------------------------------------------
// sigmoid loss
// ---------------------------------------------------------------------------

struct SigmoidSample {
  Eigen::VectorXd a;
  double b;
};

struct SigmoidDraw {
  std::vector<std::vector<SigmoidSample>> data;
  std::vector<double> scale;
  double L = 0.0;
};

SigmoidDraw draw_sigmoid(int n, int dim, SigmoidData mode, std::uint64_t seed, int m) {
  SigmoidDraw d;
  d.data.resize(n);
  d.scale.assign(n, mode == SigmoidData::homogeneous ? 1.0 : 0.0);
  Rng rng(seed);
  const int half = n / 2;
  for (int v = 0; v < n; ++v) {
    const bool active = mode == SigmoidData::homogeneous || v == 0 || v == half;
    if (!active) continue;
    if (mode == SigmoidData::two_hot_heterogeneous) d.scale[v] = n / 2.0;
    d.data[v].reserve(m);
    for (int i = 0; i < m; ++i) {
      Eigen::VectorXd a(dim);
      for (int k = 0; k < dim; ++k) a[k] = rng.normal();
      d.data[v].push_back({std::move(a), rng.uniform01()});
    }
  }
  // analytic bound on the per-component Hessian norm: 0.5 ||a||^2 per sample
  for (int v = 0; v < n; ++v) {
    if (d.scale[v] == 0.0) continue;
    double acc = 0.0;
    for (const auto& s : d.data[v]) acc += 0.5 * s.a.squaredNorm();
    d.L = std::max(d.L, d.scale[v] * acc / m);
  }
  return d;
}

class SigmoidObjective final : public Objective {
 public:
  SigmoidObjective(int n, int dim, SigmoidData mode, std::uint64_t seed, int m)
      : SigmoidObjective(n, dim, mode, m, draw_sigmoid(n, dim, mode, seed, m)) {}

  double component_value(int v, const Eigen::VectorXd& x) const override {
    if (scale_[v] == 0.0) return 0.0;
    double acc = 0.0;
    for (const auto& s : data_[v]) {
      const double r = sigmoid(x.dot(s.a)) - s.b;
      acc += 0.5 * r * r;
    }
    return scale_[v] * acc / m_;
  }

  void component_gradient(int v, const Eigen::VectorXd& x, Eigen::VectorXd& out) const override {
    out.setZero(dim());
    if (scale_[v] == 0.0) return;
    for (const auto& s : data_[v]) {
      const double sg = sigmoid(x.dot(s.a));
      out.noalias() += ((sg - s.b) * sg * (1.0 - sg)) * s.a;
    }
    out *= scale_[v] / m_;
  }

  int subcomponents(int v) const override { return scale_[v] == 0.0 ? 1 : m_; }

  void subcomponent_gradient(int v, int i, const Eigen::VectorXd& x,
                             Eigen::VectorXd& out) const override {
    out.setZero(dim());
    if (scale_[v] == 0.0) return;
    const auto& s = data_[v][static_cast<std::size_t>(i)];
    const double sg = sigmoid(x.dot(s.a));
    out.noalias() = (scale_[v] * (sg - s.b) * sg * (1.0 - sg)) * s.a;
  }

 private:
  SigmoidObjective(int n, int dim, SigmoidData mode, int m, SigmoidDraw d)
      : Objective(n, dim, d.L, 0.0), m_(m), scale_(std::move(d.scale)), data_(std::move(d.data)) {
    if (mode == SigmoidData::two_hot_heterogeneous) try_exact_minimizer();
  }

  // Two-hot components can all be fit exactly when the stacked constraints
  // a^T x = logit(b) are solvable, giving a known global minimum f* = 0.
  void try_exact_minimizer() {
    std::vector<const SigmoidSample*> active;
    for (int v = 0; v < components(); ++v)
      if (scale_[v] != 0.0)
        for (const auto& s : data_[v]) active.push_back(&s);
    const int rows = static_cast<int>(active.size());
    if (rows > dim()) return;
    Eigen::MatrixXd A(rows, dim());
    Eigen::VectorXd rhs(rows);
    for (int r = 0; r < rows; ++r) {
      if (active[r]->b <= 1e-12 || active[r]->b >= 1.0 - 1e-12) return;
      A.row(r) = active[r]->a.transpose();
      rhs[r] = logit(active[r]->b);
    }
    Eigen::VectorXd x = A.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(rhs);
    if ((A * x - rhs).cwiseAbs().maxCoeff() > 1e-9) return;
    set_minimizer(std::move(x), 0.0);
  }

  int m_;
  std::vector<double> scale_;
  std::vector<std::vector<SigmoidSample>> data_;
};

// ---------------------------------------------------------------------------
// quadratic families
// ---------------------------------------------------------------------------

Eigen::MatrixXd random_rotation(int dim, Rng& rng) {
  if (dim == 1) return Eigen::MatrixXd::Ones(1, 1);
  Eigen::MatrixXd G(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) G(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd Q = qr.householderQ();
  const Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j)
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  return Q;
}

Eigen::MatrixXd random_spd(int dim, double mu, double L, bool linear_spectrum, Rng& rng) {
  Eigen::VectorXd eigs(dim);
  if (dim == 1) {
    eigs[0] = L;
  } else {
    eigs[0] = mu;
    eigs[dim - 1] = L;
    for (int k = 1; k + 1 < dim; ++k) {
      const double u = rng.uniform01();
      eigs[k] = linear_spectrum ? mu + u * (L - mu) : mu * std::pow(L / mu, u);
    }
  }
  const Eigen::MatrixXd Q = random_rotation(dim, rng);
  return Q * eigs.asDiagonal() * Q.transpose();
}

Eigen::MatrixXd spaced_diagonal(int dim, double mu, double L, bool linear_spectrum) {
  Eigen::VectorXd eigs(dim);
  for (int k = 0; k < dim; ++k) {
    const double u = dim == 1 ? 1.0 : static_cast<double>(k) / (dim - 1);
    eigs[k] = linear_spectrum ? mu + u * (L - mu) : mu * std::pow(L / mu, u);
  }
  return Eigen::MatrixXd(eigs.asDiagonal());
}

class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(std::vector<Eigen::MatrixXd> A, std::vector<Eigen::VectorXd> centers,
                     double L, double mu)
      : Objective(static_cast<int>(A.size()), static_cast<int>(A.front().rows()), L, mu),
        A_(std::move(A)),
        centers_(std::move(centers)) {
    // exact minimizer of the weighted sum of quadratics
    const int d = dim();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
    for (int v = 0; v < components(); ++v) {
      H.noalias() += weights()[v] * A_[v];
      rhs.noalias() += weights()[v] * (A_[v] * centers_[v]);
    }
    Eigen::VectorXd x_star = H.ldlt().solve(rhs);
    double f_star = 0.0;
    for (int v = 0; v < components(); ++v)
      f_star += weights()[v] * 0.5 * (x_star - centers_[v]).dot(A_[v] * (x_star - centers_[v]));
    set_minimizer(std::move(x_star), f_star);
  }

  double component_value(int v, const Eigen::VectorXd& x) const override {
    const Eigen::VectorXd r = x - centers_[v];
    return 0.5 * r.dot(A_[v] * r);
  }

  void component_gradient(int v, const Eigen::VectorXd& x, Eigen::VectorXd& out) const override {
    out.noalias() = A_[v] * (x - centers_[v]);
  }

 private:
  std::vector<Eigen::MatrixXd> A_;
  std::vector<Eigen::VectorXd> centers_;
};

// ---------------------------------------------------------------------------
// two-point disagreement (n = 2, dim = 1)
// ---------------------------------------------------------------------------

class TwoPointObjective final : public Objective {
 public:
  TwoPointObjective() : Objective(2, 1, /*L=*/1.0, /*mu=*/1.0) {
    set_minimizer(Eigen::VectorXd::Zero(1), 0.5);
  }

  double component_value(int v, const Eigen::VectorXd& x) const override {
    const double r = x[0] - (v == 0 ? 1.0 : -1.0);
    return 0.5 * r * r;
  }

  void component_gradient(int v, const Eigen::VectorXd& x, Eigen::VectorXd& out) const override {
    out.resize(1);
    out[0] = x[0] - (v == 0 ? 1.0 : -1.0);
  }
};

// ---------------------------------------------------------------------------
// worst-case split chain function (dimension 2K+1)
// ---------------------------------------------------------------------------

class WorstCaseObjective final : public Objective {
 public:
  WorstCaseObjective(int K, double alpha, double b, int node_v, int node_w, int n, double L)
      : Objective(n, 2 * K + 1, L, 0.0),
        K_(K),
        alpha_(alpha),
        b_(b),
        node_v_(node_v),
        node_w_(node_w) {
    // minimizer of the total function when its Hessian is positive definite
    const int d = dim();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(d, d);
    H(0, 0) = alpha_;
    for (int j = 1; j < d; ++j) {
      H(j, j) = 2.0;
      H(j, j - 1) = -1.0;
      H(j - 1, j) = -1.0;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() > 1e-12) {
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
      rhs[0] = b_;
      Eigen::VectorXd x_star = H.ldlt().solve(rhs);
      const double f_star = -0.5 * b_ * x_star[0] + 0.5 * alpha_;
      set_minimizer(std::move(x_star), f_star);
    }
  }

  // pi_v f_v carries the even coordinates plus the forcing term on x(0);
  // pi_w f_w carries the odd coordinates; all other components vanish.
  double component_value(int v, const Eigen::VectorXd& x) const override {
    const double n = components();
    if (v == node_v_) {
      double acc = 0.5 * alpha_ * x[0] * x[0] - b_ * x[0] + 0.5 * alpha_;
      for (int k = 1; k <= K_; ++k) acc += x[2 * k] * x[2 * k] - x[2 * k - 1] * x[2 * k];
      return n * acc;
    }
    if (v == node_w_) {
      double acc = 0.0;
      for (int k = 0; k < K_; ++k) acc += x[2 * k + 1] * x[2 * k + 1] - x[2 * k + 1] * x[2 * k];
      return n * acc;
    }
    return 0.0;
  }

  void component_gradient(int v, const Eigen::VectorXd& x, Eigen::VectorXd& out) const override {
    out.setZero(dim());
    const double n = components();
    if (v == node_v_) {
      out[0] = n * (alpha_ * x[0] - b_);
      for (int k = 1; k <= K_; ++k) {
        out[2 * k] = n * (2.0 * x[2 * k] - x[2 * k - 1]);
        out[2 * k - 1] = -n * x[2 * k];
      }
    } else if (v == node_w_) {
      for (int k = 0; k < K_; ++k) {
        out[2 * k + 1] = n * (2.0 * x[2 * k + 1] - x[2 * k]);
        out[2 * k] += -n * x[2 * k + 1];
      }
    }
  }

 private:
  int K_;
  double alpha_;
  double b_;
  int node_v_;
  int node_w_;
};

double worst_case_smoothness(int K, double alpha, int n) {
  // spectral norms of the two nonzero component Hessians
  const int d = 2 * K + 1;
  Eigen::MatrixXd Hv = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd Hw = Eigen::MatrixXd::Zero(d, d);
  Hv(0, 0) = alpha;
  for (int k = 1; k <= K; ++k) {
    Hv(2 * k, 2 * k) = 2.0;
    Hv(2 * k, 2 * k - 1) = -1.0;
    Hv(2 * k - 1, 2 * k) = -1.0;
  }
  for (int k = 0; k < K; ++k) {
    Hw(2 * k + 1, 2 * k + 1) = 2.0;
    Hw(2 * k + 1, 2 * k) = -1.0;
    Hw(2 * k, 2 * k + 1) = -1.0;
  }
  const auto norm_of = [](const Eigen::MatrixXd& H) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    return std::max(std::abs(es.eigenvalues().minCoeff()), std::abs(es.eigenvalues().maxCoeff()));
  };
  return n * std::max(norm_of(Hv), norm_of(Hw));
}

}  // namespace

ObjectivePtr sigmoid_loss(int n, int dim, SigmoidData mode, std::uint64_t seed,
                          int samples_per_node) {
  if (n < 1 || dim < 1) throw std::invalid_argument("sigmoid_loss: n and dim must be positive");
  if (samples_per_node < 1) throw std::invalid_argument("sigmoid_loss: samples_per_node >= 1");
  if (mode == SigmoidData::two_hot_heterogeneous && n < 2)
    throw std::invalid_argument("sigmoid_loss: two-hot mode needs n >= 2");
  return std::make_shared<SigmoidObjective>(n, dim, mode, seed, samples_per_node);
}

ObjectivePtr quadratic_interpolation(int n, int dim, std::uint64_t seed, double condition) {
  if (n < 1 || dim < 1)
    throw std::invalid_argument("quadratic_interpolation: n and dim must be positive");
  if (!(condition >= 1.0))
    throw std::invalid_argument("quadratic_interpolation: condition must be >= 1");
  Rng rng(seed);
  Eigen::VectorXd x_star(dim);
  for (int k = 0; k < dim; ++k) x_star[k] = rng.normal();
  std::vector<Eigen::MatrixXd> A;
  A.reserve(n);
  for (int v = 0; v < n; ++v) A.push_back(random_spd(dim, 1.0, condition, false, rng));
  std::vector<Eigen::VectorXd> centers(n, x_star);
  return std::make_shared<QuadraticObjective>(std::move(A), std::move(centers), condition, 1.0);
}

ObjectivePtr quadratic_heterogeneous(int n, int dim, std::uint64_t seed,
                                     const QuadraticHetOptions& options) {
  if (n < 1 || dim < 1)
    throw std::invalid_argument("quadratic_heterogeneous: n and dim must be positive");
  if (!(options.condition >= 1.0))
    throw std::invalid_argument("quadratic_heterogeneous: condition must be >= 1");
  if (!(options.spread >= 0.0))
    throw std::invalid_argument("quadratic_heterogeneous: spread must be >= 0");
  Rng rng(seed);
  Eigen::VectorXd anchor(dim);
  for (int k = 0; k < dim; ++k) anchor[k] = rng.normal();
  std::vector<Eigen::MatrixXd> A;
  A.reserve(n);
  if (options.shared_matrix) {
    const Eigen::MatrixXd shared =
        spaced_diagonal(dim, 1.0, options.condition, options.linear_spectrum);
    for (int v = 0; v < n; ++v) A.push_back(shared);
  } else {
    for (int v = 0; v < n; ++v)
      A.push_back(random_spd(dim, 1.0, options.condition, options.linear_spectrum, rng));
  }
  std::vector<Eigen::VectorXd> centers(n);
  for (int v = 0; v < n; ++v) {
    Eigen::VectorXd c(dim);
    for (int k = 0; k < dim; ++k) c[k] = anchor[k] + options.spread * rng.normal();
    centers[v] = std::move(c);
  }
  return std::make_shared<QuadraticObjective>(std::move(A), std::move(centers), options.condition,
                                              1.0);
}

ObjectivePtr two_point_disagreement() { return std::make_shared<TwoPointObjective>(); }

ObjectivePtr worst_case_chain(int K, double alpha, double b, int node_v, int node_w, int n) {
  if (K < 1) throw std::invalid_argument("worst_case_chain: K must be >= 1");
  if (!(alpha > 0.0) || !(b > 0.0))
    throw std::invalid_argument("worst_case_chain: alpha and b must be positive");
  if (n < 2 || node_v < 0 || node_w < 0 || node_v >= n || node_w >= n || node_v == node_w)
    throw std::invalid_argument("worst_case_chain: invalid node assignment");
  const double L = worst_case_smoothness(K, alpha, n);
  return std::make_shared<WorstCaseObjective>(K, alpha, b, node_v, node_w, n, L);
}

DissimilarityStats dissimilarity_stats(const Objective& obj, const Eigen::VectorXd& x_ref,
                                       int sample_points, std::uint64_t seed) {
  const int n = obj.components();
  const int d = obj.dim();
  DissimilarityStats out;
  Eigen::VectorXd g(d), gv(d);
  obj.gradient(x_ref, g);
  for (int v = 0; v < n; ++v) {
    obj.component_gradient(v, x_ref, gv);
    out.sigma_star_sq = std::max(out.sigma_star_sq, gv.squaredNorm());
  }
  // empirical lower estimates of the sup over x, sampled in a ball around x_ref
  Rng rng(seed);
  const double radius = 1.0 + x_ref.norm();
  std::vector<double> sigma_v(n, 0.0);
  for (int s = 0; s < sample_points; ++s) {
    Eigen::VectorXd dir(d);
    for (int k = 0; k < d; ++k) dir[k] = rng.normal();
    const double norm = dir.norm();
    if (norm > 0.0) dir /= norm;
    const double r = radius * std::pow(rng.uniform01(), 1.0 / d);
    const Eigen::VectorXd x = x_ref + r * dir;
    obj.gradient(x, g);
    for (int v = 0; v < n; ++v) {
      obj.component_gradient(v, x, gv);
      sigma_v[v] = std::max(sigma_v[v], (gv - g).squaredNorm());
    }
  }
  for (int v = 0; v < n; ++v) {
    out.sigma_bar_sq += obj.weights()[v] * sigma_v[v];
    out.sigma_max_sq = std::max(out.sigma_max_sq, sigma_v[v]);
  }
  return out;
}

double estimate_f_star(const Objective& obj, const Eigen::VectorXd& x0, std::int64_t steps,
                       int restarts, std::uint64_t seed) {
  const double gamma = 1.0 / obj.smoothness();
  Rng rng(seed);
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd g(obj.dim());
  for (int start = 0; start <= restarts; ++start) {
    Eigen::VectorXd x = x0;
    if (start > 0)
      for (int k = 0; k < obj.dim(); ++k) x[k] = x0[k] + rng.normal();
    for (std::int64_t t = 0; t < steps; ++t) {
      obj.gradient(x, g);
      const double gsq = g.squaredNorm();
      if (gsq < 1e-24) break;
      x.noalias() -= gamma * g;
    }
    best = std::min(best, obj.value(x));
  }
  return best;
}

}  // namespace tokenopt
