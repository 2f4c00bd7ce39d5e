#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "pushpull/error.hpp"
#include "pushpull/mixing.hpp"
#include "pushpull/random.hpp"

namespace pushpull {

/// f(x) = 0.5 x^T A x - b^T x
struct QuadraticAgent {
  Matrix A;
  Vector b;

  int dim() const { return static_cast<int>(b.size()); }
  double value(const Vector& x) const { return 0.5 * x.dot(A * x) - b.dot(x); }
  Vector gradient(const Vector& x) const { return A * x - b; }
  Matrix hessian(const Vector&) const { return A; }
};

/// Scalar Huber function: t^2/2 for |t| <= delta, delta (|t| - delta/2) beyond.
inline double huber(double t, double delta) {
  const double a = std::abs(t);
  return a <= delta ? 0.5 * t * t : delta * (a - 0.5 * delta);
}

/// Derivative of the Huber function; |t| = delta takes the quadratic branch.
inline double huber_derivative(double t, double delta) {
  if (std::abs(t) <= delta) return t;
  return t > 0.0 ? delta : -delta;
}

/// f(x) = sum_d h(x_d - c_d) + (reg_mu / 2) ||x - c||^2
struct HuberAgent {
  Vector center;
  double huber_delta = 1.0;
  double reg_mu = 0.1;

  int dim() const { return static_cast<int>(center.size()); }

  double value(const Vector& x) const {
    double f = 0.0;
    for (Eigen::Index d = 0; d < center.size(); ++d) f += huber(x(d) - center(d), huber_delta);
    return f + 0.5 * reg_mu * (x - center).squaredNorm();
  }

  Vector gradient(const Vector& x) const {
    Vector g(center.size());
    for (Eigen::Index d = 0; d < center.size(); ++d) {
      const double t = x(d) - center(d);
      g(d) = huber_derivative(t, huber_delta) + reg_mu * t;
    }
    return g;
  }

  Matrix hessian(const Vector& x) const {
    Vector diag(center.size());
    for (Eigen::Index d = 0; d < center.size(); ++d) {
      diag(d) = (std::abs(x(d) - center(d)) <= huber_delta ? 1.0 : 0.0) + reg_mu;
    }
    return diag.asDiagonal();
  }

  /// Every coordinate of x sits in the quadratic zone of this agent.
  bool in_quadratic_zone(const Vector& x) const {
    return ((x - center).array().abs() <= huber_delta).all();
  }
};

enum class ObjectiveFamily { Quadratic, Huber };

/// n agent objectives of one family sharing certified constants (mu, L).
class ObjectiveEnsemble {
 public:
  ObjectiveEnsemble(std::vector<QuadraticAgent> agents, double mu, double L,
                    std::uint64_t seed = 0)
      : agents_(std::move(agents)), mu_(mu), L_(L), seed_(seed) {
    validate();
  }
  ObjectiveEnsemble(std::vector<HuberAgent> agents, double mu, double L,
                    std::uint64_t seed = 0)
      : agents_(std::move(agents)), mu_(mu), L_(L), seed_(seed) {
    validate();
  }

  ObjectiveFamily family() const {
    return std::holds_alternative<std::vector<QuadraticAgent>>(agents_)
               ? ObjectiveFamily::Quadratic
               : ObjectiveFamily::Huber;
  }
  int size() const {
    return std::visit([](const auto& a) { return static_cast<int>(a.size()); }, agents_);
  }
  int dim() const {
    return std::visit([](const auto& a) { return a.front().dim(); }, agents_);
  }
  double mu() const { return mu_; }
  double L() const { return L_; }
  std::uint64_t seed() const { return seed_; }

  const std::vector<QuadraticAgent>& quadratic_agents() const {
    return std::get<std::vector<QuadraticAgent>>(agents_);
  }
  const std::vector<HuberAgent>& huber_agents() const {
    return std::get<std::vector<HuberAgent>>(agents_);
  }

  double value(int i, const Vector& x) const {
    return std::visit([&](const auto& a) { return a[i].value(x); }, agents_);
  }
  Vector gradient(int i, const Vector& x) const {
    return std::visit([&](const auto& a) { return a[i].gradient(x); }, agents_);
  }
  Matrix hessian(int i, const Vector& x) const {
    return std::visit([&](const auto& a) { return a[i].hessian(x); }, agents_);
  }

  /// f(x) = sum_i f_i(x)
  double total_value(const Vector& x) const {
    double f = 0.0;
    for (int i = 0; i < size(); ++i) f += value(i, x);
    return f;
  }
  Vector total_gradient(const Vector& x) const {
    Vector g = Vector::Zero(dim());
    for (int i = 0; i < size(); ++i) g += gradient(i, x);
    return g;
  }
  Matrix total_hessian(const Vector& x) const {
    Matrix H = Matrix::Zero(dim(), dim());
    for (int i = 0; i < size(); ++i) H += hessian(i, x);
    return H;
  }

 private:
  void validate() const {
    const bool empty = std::visit([](const auto& a) { return a.empty(); }, agents_);
    if (empty) throw Error(ErrorCode::InvalidArgument, "ensemble has no agents");
    if (!(mu_ > 0.0 && mu_ <= L_)) {
      throw Error(ErrorCode::InvalidArgument, "need 0 < mu <= L");
    }
    const int p = dim();
    std::visit(
        [p](const auto& agents) {
          for (const auto& a : agents) {
            if (a.dim() != p) throw Error(ErrorCode::ShapeMismatch, "agent dimensions differ");
            if constexpr (std::is_same_v<std::decay_t<decltype(a)>, QuadraticAgent>) {
              if (a.A.rows() != p || a.A.cols() != p) {
                throw Error(ErrorCode::ShapeMismatch, "A_i must be p x p");
              }
              if ((a.A - a.A.transpose()).template lpNorm<Eigen::Infinity>() > 1e-12) {
                throw Error(ErrorCode::InvalidArgument, "A_i must be symmetric");
              }
            } else {
              if (!(a.huber_delta > 0.0 && a.reg_mu > 0.0)) {
                throw Error(ErrorCode::InvalidArgument, "Huber parameters must be positive");
              }
            }
          }
        },
        agents_);
  }

  std::variant<std::vector<QuadraticAgent>, std::vector<HuberAgent>> agents_;
  double mu_;
  double L_;
  std::uint64_t seed_;
};

/// Row i of the result is grad f_i(row i of X).
inline Matrix stacked_gradient(const ObjectiveEnsemble& ens, const Matrix& X) {
  if (X.rows() != ens.size() || X.cols() != ens.dim()) {
    throw Error(ErrorCode::ShapeMismatch, "iterate must be n x p");
  }
  Matrix G(X.rows(), X.cols());
  for (int i = 0; i < ens.size(); ++i) {
    G.row(i) = ens.gradient(i, X.row(i).transpose()).transpose();
  }
  return G;
}

/// Unique minimizer of sum_i f_i.
inline Vector global_optimum(const ObjectiveEnsemble& ens) {
  const int p = ens.dim();
  if (ens.family() == ObjectiveFamily::Quadratic) {
    Matrix A = Matrix::Zero(p, p);
    Vector b = Vector::Zero(p);
    for (const auto& agent : ens.quadratic_agents()) {
      A += agent.A;
      b += agent.b;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(A, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() <= 1e-12 * std::max(1.0, eig.eigenvalues().maxCoeff())) {
      throw Error(ErrorCode::SingularSystem, "sum of A_i is singular");
    }
    Vector x = A.ldlt().solve(b);
    // One refinement step pushes the summed gradient to rounding level.
    x -= A.ldlt().solve(A * x - b);
    return x;
  }

  // Damped Newton from the mean of the centres.
  Vector x = Vector::Zero(p);
  for (const auto& agent : ens.huber_agents()) x += agent.center;
  x /= ens.size();
  constexpr int kBudget = 1000;
  constexpr double kGradTol = 1e-13;
  for (int it = 0; it < kBudget; ++it) {
    const Vector g = ens.total_gradient(x);
    if (g.norm() <= kGradTol) return x;
    const Vector step = ens.total_hessian(x).ldlt().solve(g);
    const double f0 = ens.total_value(x);
    double t = 1.0;
    Vector trial = x - step;
    while (ens.total_value(trial) > f0 - 1e-4 * t * g.dot(step) && t > 1e-12) {
      t *= 0.5;
      trial = x - t * step;
    }
    if (trial == x) {
      // No representable progress left; accept if the gradient is at rounding level.
      if (g.norm() <= 1e-12) return x;
      break;
    }
    x = trial;
  }
  if (ens.total_gradient(x).norm() <= 1e-12) return x;
  throw Error(ErrorCode::NonConvergence, "Newton budget exhausted");
}

/// Random quadratic ensemble: A_i = Q_i diag(s) Q_i^T with spectrum in
/// [mu, L] (both endpoints attained when p > 1), b_i standard normal.
inline ObjectiveEnsemble make_quadratic_ensemble(int n, int p, std::uint64_t seed,
                                                 double mu = 1.0, double L = 2.0) {
  if (n < 1 || p < 1 || !(mu > 0.0 && mu <= L)) {
    throw Error(ErrorCode::InvalidArgument, "bad quadratic ensemble parameters");
  }
  Rng rng(seed);
  std::vector<QuadraticAgent> agents;
  agents.reserve(n);
  for (int i = 0; i < n; ++i) {
    Matrix G(p, p);
    for (int r = 0; r < p; ++r)
      for (int c = 0; c < p; ++c) G(r, c) = rng.normal();
    const Matrix Q = G.householderQr().householderQ();
    Vector s(p);
    for (int d = 0; d < p; ++d) s(d) = rng.uniform(mu, L);
    s(0) = mu;
    if (p > 1) s(p - 1) = L;
    Matrix A = Q * s.asDiagonal() * Q.transpose();
    A = 0.5 * (A + A.transpose());
    Vector b(p);
    for (int d = 0; d < p; ++d) b(d) = rng.normal();
    agents.push_back({std::move(A), std::move(b)});
  }
  return ObjectiveEnsemble(std::move(agents), mu, L, seed);
}

/// Huber ensemble whose optimum lies in the quadratic zone of every term while
/// the origin lies in the linear zone of at least one term. Centres are a
/// common anchor (at distance 2-4 delta from the origin per coordinate) plus
/// per-agent offsets in [-0.75 delta, 0.75 delta]; draws failing either zone
/// condition are resampled.
inline ObjectiveEnsemble make_huber_ensemble(int n, int p, std::uint64_t seed,
                                             double huber_delta = 1.0, double reg_mu = 0.1) {
  if (n < 1 || p < 1 || !(huber_delta > 0.0) || !(reg_mu > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "bad Huber ensemble parameters");
  }
  Rng rng(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    Vector anchor(p);
    for (int d = 0; d < p; ++d) {
      const double magnitude = rng.uniform(2.0, 4.0) * huber_delta;
      anchor(d) = rng.bernoulli(0.5) ? magnitude : -magnitude;
    }
    std::vector<HuberAgent> agents;
    agents.reserve(n);
    for (int i = 0; i < n; ++i) {
      Vector c(p);
      for (int d = 0; d < p; ++d) {
        c(d) = anchor(d) + (n == 1 ? 0.0 : rng.uniform(-0.75, 0.75) * huber_delta);
      }
      agents.push_back({std::move(c), huber_delta, reg_mu});
    }
    ObjectiveEnsemble ens(agents, reg_mu, 1.0 + reg_mu, seed);
    const Vector x_star = global_optimum(ens);
    const Vector origin = Vector::Zero(p);
    const bool optimum_quadratic = std::all_of(
        agents.begin(), agents.end(), [&](const HuberAgent& a) { return a.in_quadratic_zone(x_star); });
    const bool origin_linear = std::any_of(
        agents.begin(), agents.end(), [&](const HuberAgent& a) { return !a.in_quadratic_zone(origin); });
    if (optimum_quadratic && origin_linear) return ens;
  }
  throw Error(ErrorCode::GenerationFailure, "zone conditions not met after 100 draws");
}

}  // namespace pushpull
