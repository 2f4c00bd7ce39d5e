#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string_view>

#include "pushpull/error.hpp"
#include "pushpull/mixing.hpp"
#include "pushpull/norms.hpp"
#include "pushpull/solver.hpp"

namespace pushpull {

using Matrix3 = Eigen::Matrix3d;
using Vector3 = Eigen::Vector3d;

/// Scalars of a (mixing, norms) pair that enter the transition matrix.
struct NetworkConstants {
  int n = 1;
  double u_dot_v = 1.0;
  double sigma_R = 0.0;
  double sigma_C = 0.0;
  double delta_RC = 1.0;    // ||x||_R <= delta_RC ||x||_C
  double delta_C2 = 1.0;    // ||x||_C <= delta_C2 ||x||_2
  double u_minus_1 = 0.0;   // ||u - 1||_2
  double v_minus_1_R = 0.0; // ||v - 1||_R
  double R_norm = 1.0;      // ||R||_2
  double R_minus_I = 0.0;   // ||R - I||_2
  double Rv_norm = 1.0;     // ||R v||_2
};

inline NetworkConstants network_constants(const MixingPair& mixing, const NormSystem& norms) {
  const int n = mixing.size();
  const Vector ones = Vector::Ones(n);
  NetworkConstants k;
  k.n = n;
  k.u_dot_v = mixing.u_dot_v();
  k.sigma_R = norms.norm_R.sigma;
  k.sigma_C = norms.norm_C.sigma;
  k.delta_RC = norms.delta.r_c;
  k.delta_C2 = norms.delta.c_2;
  k.u_minus_1 = (mixing.u - ones).norm();
  k.v_minus_1_R = norms.norm_R(mixing.v - ones);
  k.R_norm = induced_matrix_norm(mixing.R);
  k.R_minus_I = induced_matrix_norm(mixing.R - Matrix::Identity(n, n));
  k.Rv_norm = (mixing.R * mixing.v).norm();
  return k;
}

struct TransitionMatrix {
  Matrix3 a = Matrix3::Zero();
  double alpha = 0.0;
  double alpha_prime = 0.0;  // (alpha / n) u^T v
  double rho_A = 0.0;
};

inline double spectral_radius3(const Matrix3& m) {
  Eigen::EigenSolver<Matrix3> solver(m, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

/// Transition matrix coupling (optimality gap, consensus error, tracking
/// error) across one push-pull step. Requires alpha' <= 2/(mu+L).
inline TransitionMatrix build_transition_matrix(const NetworkConstants& k, double mu, double L,
                                                double alpha) {
  if (!(alpha >= 0.0)) throw Error(ErrorCode::StepSizeOutOfRange, "alpha must be >= 0");
  const double n = k.n;
  const double sqrt_n = std::sqrt(n);
  const double alpha_prime = alpha / n * k.u_dot_v;
  if (alpha_prime > 2.0 / (mu + L) * (1.0 + 1e-12)) {
    throw Error(ErrorCode::StepSizeOutOfRange, "alpha' exceeds 2/(mu+L)");
  }
  TransitionMatrix t;
  t.alpha = alpha;
  t.alpha_prime = alpha_prime;
  auto& a = t.a;
  a(0, 0) = 1.0 - alpha_prime * mu;
  a(1, 0) = alpha * k.sigma_R * k.v_minus_1_R * L;
  a(2, 0) = alpha * k.sigma_C * k.delta_C2 * k.Rv_norm * L * L;

  a(0, 1) = alpha_prime * L / sqrt_n;
  a(1, 1) = k.sigma_R * (1.0 + alpha * k.v_minus_1_R * L / sqrt_n);
  a(2, 1) = k.sigma_C * k.delta_C2 * L * (k.R_minus_I + alpha * k.Rv_norm * L / sqrt_n);

  a(0, 2) = alpha * k.u_minus_1 / n;
  a(1, 2) = alpha * k.sigma_R * k.delta_RC;
  a(2, 2) = k.sigma_C * (1.0 + alpha * k.delta_C2 * k.R_norm * L);
  t.rho_A = spectral_radius3(a);
  return t;
}

inline TransitionMatrix build_transition_matrix(const MixingPair& mixing,
                                                const NormSystem& norms, double mu, double L,
                                                double alpha) {
  return build_transition_matrix(network_constants(mixing, norms), mu, L, alpha);
}

/// det(I - A) written out by cofactors in terms of the entries a_ij.
inline double det_identity_minus(const Matrix3& a) {
  const double d1 = 1.0 - a(0, 0), d2 = 1.0 - a(1, 1), d3 = 1.0 - a(2, 2);
  return d1 * d2 * d3 - a(0, 1) * a(1, 2) * a(2, 0) - a(0, 2) * a(1, 0) * a(2, 1) -
         d2 * a(0, 2) * a(2, 0) - d1 * a(1, 2) * a(2, 1) - d3 * a(0, 1) * a(1, 0);
}

/// The same determinant with the off-diagonal products expanded in terms of
/// the network constants and alpha.
inline double det_identity_minus_expanded(const NetworkConstants& k, double mu, double L,
                                          double alpha) {
  const double n = k.n;
  const double sqrt_n = std::sqrt(n);
  const double ap = alpha / n * k.u_dot_v;
  const double one_a11 = ap * mu;
  const double one_a22 = 1.0 - k.sigma_R * (1.0 + alpha * k.v_minus_1_R * L / sqrt_n);
  const double one_a33 = 1.0 - k.sigma_C * (1.0 + alpha * k.delta_C2 * k.R_norm * L);
  const double coupling = k.R_minus_I + alpha * k.Rv_norm * L / sqrt_n;
  return one_a11 * one_a22 * one_a33 -
         ap * alpha * alpha * k.sigma_R * k.sigma_C * k.delta_RC * k.delta_C2 * k.Rv_norm *
             L * L * L / sqrt_n -
         alpha * alpha * k.sigma_R * k.sigma_C * k.delta_C2 * k.u_minus_1 * k.v_minus_1_R *
             coupling * L * L / n -
         alpha * alpha * k.sigma_C * k.delta_C2 * k.Rv_norm * k.u_minus_1 * L * L / n *
             one_a22 -
         alpha * k.sigma_R * k.sigma_C * k.delta_RC * k.delta_C2 * L * coupling * one_a11 -
         ap * alpha * k.sigma_R * k.v_minus_1_R * L * L / sqrt_n * one_a33;
}

enum class BindingTerm { QuadraticRoot, TrackingContraction, ConsensusContraction, StepGuard };

constexpr std::string_view to_string(BindingTerm b) {
  switch (b) {
    case BindingTerm::QuadraticRoot: return "quadratic_root";
    case BindingTerm::TrackingContraction: return "tracking_contraction";
    case BindingTerm::ConsensusContraction: return "consensus_contraction";
    case BindingTerm::StepGuard: return "step_guard";
  }
  return "unknown";
}

struct StepSizeCertificate {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double alpha_max = 0.0;
  /// The four candidates in BindingTerm order; +inf where a denominator vanishes.
  std::array<double, 4> terms{};
  BindingTerm binding_term = BindingTerm::StepGuard;
  double norm_gamma_R = 0.0;
  double norm_gamma_C = 0.0;
  double mu = 0.0;
  double L = 0.0;
  NetworkConstants constants;
};

namespace analysis_detail {

inline double ratio_or_inf(double num, double den) {
  return den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
}

}  // namespace analysis_detail

/// c1 with every product written out term by term (before factoring).
inline double c1_unfactored(const NetworkConstants& k, double mu, double L) {
  const double n = k.n, sqrt_n = std::sqrt(n);
  return k.u_dot_v / n * k.sigma_R * k.sigma_C * k.delta_RC * k.delta_C2 * k.Rv_norm * L * L *
             L / sqrt_n +
         k.sigma_R * k.sigma_C * k.delta_C2 * k.u_minus_1 * k.v_minus_1_R * k.Rv_norm * L /
             sqrt_n * L * L / n +
         k.u_dot_v / n * mu * k.sigma_R * k.sigma_C * k.delta_RC * k.delta_C2 * L * k.Rv_norm *
             L / sqrt_n;
}

/// Largest step size certified by the small-gain argument: the quadratic
/// root, both contraction conditions, and the alpha' <= 2/(mu+L) guard.
inline StepSizeCertificate step_size_bound(const NetworkConstants& k, double mu, double L) {
  if (!(mu > 0.0 && mu <= L)) throw Error(ErrorCode::AssumptionViolation, "need 0 < mu <= L");
  if (!(k.u_dot_v > 0.0) || !(k.sigma_R < 1.0) || !(k.sigma_C < 1.0)) {
    throw Error(ErrorCode::AssumptionViolation, "mixing constants violate the assumptions");
  }
  const double n = k.n, sqrt_n = std::sqrt(n);
  StepSizeCertificate cert;
  cert.mu = mu;
  cert.L = L;
  cert.constants = k;
  cert.c1 = k.sigma_R * k.sigma_C * k.delta_C2 * k.Rv_norm * L * L / (n * sqrt_n) *
            (k.u_dot_v * k.delta_RC * (L + mu) + k.u_minus_1 * k.v_minus_1_R * L);
  cert.c2 = k.sigma_R * k.sigma_C * k.delta_C2 * k.u_minus_1 * k.v_minus_1_R * k.R_minus_I * L *
                L / n +
            k.sigma_C * k.delta_C2 * k.Rv_norm * k.u_minus_1 * (1.0 - k.sigma_R) * L * L / n +
            k.sigma_R * k.sigma_C * k.delta_RC * k.delta_C2 * L * k.R_minus_I * k.u_dot_v / n *
                mu +
            k.sigma_R * k.v_minus_1_R * L * L / sqrt_n * (1.0 - k.sigma_C) * k.u_dot_v / n;
  cert.c3 = k.u_dot_v / (4.0 * n) * mu * (1.0 - k.sigma_R) * (1.0 - k.sigma_C);

  using analysis_detail::ratio_or_inf;
  cert.terms[0] = ratio_or_inf(2.0 * cert.c3,
                               cert.c2 + std::sqrt(cert.c2 * cert.c2 + 4.0 * cert.c1 * cert.c3));
  cert.terms[1] =
      ratio_or_inf(1.0 - k.sigma_C, 2.0 * k.sigma_C * k.delta_C2 * k.R_norm * L);
  cert.terms[2] =
      ratio_or_inf((1.0 - k.sigma_R) * sqrt_n, 2.0 * k.sigma_R * k.v_minus_1_R * L);
  cert.terms[3] = 2.0 / (mu + L) * n / k.u_dot_v;
  const auto best = std::min_element(cert.terms.begin(), cert.terms.end());
  cert.alpha_max = *best;
  cert.binding_term = static_cast<BindingTerm>(best - cert.terms.begin());
  return cert;
}

inline StepSizeCertificate step_size_bound(const MixingPair& mixing, const NormSystem& norms,
                                           double mu, double L) {
  auto cert = step_size_bound(network_constants(mixing, norms), mu, L);
  cert.norm_gamma_R = norms.norm_R.gamma;
  cert.norm_gamma_C = norms.norm_C.gamma;
  return cert;
}

/// Finite irreducibility test for a nonnegative 3x3: (I + M)^2 > 0 entrywise.
inline bool is_irreducible(const Matrix3& m) {
  const Matrix3 s = Matrix3::Identity() + m;
  return ((s * s).array() > 0.0).all();
}

/// For nonnegative irreducible M with every diagonal entry below lambda*:
/// rho(M) < lambda* iff det(lambda* I - M) > 0.
inline bool cubic_radius_criterion(const Matrix3& m, double lambda_star) {
  if (!(lambda_star > 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda* must be positive");
  if ((m.array() < 0.0).any()) throw Error(ErrorCode::InvalidArgument, "M must be nonnegative");
  if (!is_irreducible(m)) throw Error(ErrorCode::NotIrreducible, "M is reducible");
  if ((m.diagonal().array() >= lambda_star).any()) {
    throw Error(ErrorCode::DiagonalTooLarge, "a diagonal entry reaches lambda*");
  }
  return (lambda_star * Matrix3::Identity() - m).determinant() > 0.0;
}

/// Least-squares slope of log ||composite_k||_2 against k, exponentiated.
inline double empirical_rate(const SolverTrace& trace) {
  double sk = 0, sy = 0, skk = 0, sky = 0;
  long count = 0;
  for (const auto& r : trace.records) {
    const double norm = Vector3(r.composite[0], r.composite[1], r.composite[2]).norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) continue;
    const double k = static_cast<double>(r.k), y = std::log(norm);
    sk += k;
    sy += y;
    skk += k * k;
    sky += k * y;
    ++count;
  }
  if (count < 2) return std::numeric_limits<double>::quiet_NaN();
  const double c = static_cast<double>(count);
  const double slope = (c * sky - sk * sy) / (c * skk - sk * sk);
  return std::exp(slope);
}

struct TransitionCheckReport {
  long pairs_checked = 0;
  long violations = 0;
  /// Largest (lhs - rhs) / rhs over all components and pairs (<= 0 when clean).
  double worst_relative_excess = -std::numeric_limits<double>::infinity();
  long worst_k = -1;
  int worst_component = -1;
  double empirical_rate = 0.0;
  double rho_A = 0.0;
};

inline constexpr double kTransitionRelativeSlack = 1e-8;
/// Absolute floor (relative to the initial composite) below which rounding
/// noise in the iterates is not a violation.
inline constexpr double kTransitionAbsoluteFloor = 1e-13;

/// Checks composite(k+1) <= A composite(k) componentwise along a static
/// push-pull trace run with A's step size.
inline TransitionCheckReport check_transition_inequality(const SolverTrace& trace,
                                              const TransitionMatrix& A) {
  if (!trace.static_topology || trace.variant != Variant::PushPull) {
    throw Error(ErrorCode::TraceMismatch, "needs a static push_pull trace");
  }
  if (std::abs(trace.alpha - A.alpha) > 1e-12 * std::max(1.0, A.alpha)) {
    throw Error(ErrorCode::TraceMismatch, "trace step size differs from the certificate's");
  }
  TransitionCheckReport rep;
  rep.rho_A = A.rho_A;
  rep.empirical_rate = empirical_rate(trace);
  if (trace.records.empty()) return rep;
  const auto& c0 = trace.records.front().composite;
  const double floor =
      kTransitionAbsoluteFloor * std::max({1.0, std::abs(c0[0]), std::abs(c0[1]), std::abs(c0[2])});
  for (std::size_t i = 0; i + 1 < trace.records.size(); ++i) {
    const auto& cur = trace.records[i].composite;
    const auto& nxt = trace.records[i + 1].composite;
    const Vector3 now(cur[0], cur[1], cur[2]);
    const Vector3 next(nxt[0], nxt[1], nxt[2]);
    if (!now.allFinite() || !next.allFinite()) {
      throw Error(ErrorCode::TraceMismatch, "trace has non-finite composite entries");
    }
    const Vector3 bound = A.a * now;
    ++rep.pairs_checked;
    bool violated = false;
    for (int c = 0; c < 3; ++c) {
      const double allowed = bound(c) * (1.0 + kTransitionRelativeSlack) + floor;
      const double excess = (next(c) - bound(c)) / std::max(bound(c), floor);
      if (excess > rep.worst_relative_excess) {
        rep.worst_relative_excess = excess;
        rep.worst_k = trace.records[i].k;
        rep.worst_component = c;
      }
      if (next(c) > allowed) violated = true;
    }
    if (violated) ++rep.violations;
  }
  return rep;
}

struct SmallAlphaReport {
  double alpha_max = 0.0;
  double ratio_tenth = 0.0;      // (1 - rho_A) / (alpha' mu) at alpha_max / 10
  double ratio_hundredth = 0.0;  // same at alpha_max / 100
  bool approaching_one() const {
    // 1e-12 absorbs cancellation in 1 - rho_A once the ratio is already exact.
    return std::abs(ratio_hundredth - 1.0) <= std::abs(ratio_tenth - 1.0) + 1e-12;
  }
};

inline double small_alpha_ratio(const NetworkConstants& k, double mu, double L, double alpha) {
  const auto t = build_transition_matrix(k, mu, L, alpha);
  return (1.0 - t.rho_A) / (t.alpha_prime * mu);
}

/// For small alpha the spectral radius behaves like 1 - alpha' mu.
inline SmallAlphaReport small_alpha_rate_check(const MixingPair& mixing, const NormSystem& norms,
                                               double mu, double L) {
  const auto k = network_constants(mixing, norms);
  const auto cert = step_size_bound(k, mu, L);
  SmallAlphaReport rep;
  rep.alpha_max = cert.alpha_max;
  rep.ratio_tenth = small_alpha_ratio(k, mu, L, cert.alpha_max / 10.0);
  rep.ratio_hundredth = small_alpha_ratio(k, mu, L, cert.alpha_max / 100.0);
  return rep;
}

}  // namespace pushpull
