#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "pushpull/error.hpp"
#include "pushpull/mixing.hpp"

namespace pushpull {

/// Ellipsoidal norm ||w||_P = sqrt(w^T P w) with P symmetric and P >= I.
///
/// Built from a residual mixing matrix B so that the induced norm of B is a
/// certified `sigma` < gamma < 1. On n x p blocks the norm is applied to each
/// column and the p results are combined with the 2-norm.
struct WeightedNorm {
  Matrix P;
  double sigma = 0.0;
  double gamma = 0.0;

  int size() const { return static_cast<int>(P.rows()); }

  double operator()(const Vector& w) const { return std::sqrt(w.dot(P * w)); }

  static WeightedNorm euclidean(int n) { return {Matrix::Identity(n, n), 0.0, 0.0}; }
};

/// Solves A^T P A - P = -I for A = B / gamma. Kronecker solve for small n,
/// Smith doubling above that.
inline Matrix solve_discrete_lyapunov(const Matrix& A) {
  const auto n = A.rows();
  Matrix P;
  if (n <= 64) {
    // vec(A^T P A) = (A^T kron A^T) vec(P)
    const auto N = n * n;
    Matrix K(N, N);
    const Matrix At = A.transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        K.block(i * n, j * n, n, n) = At(i, j) * At;
      }
    }
    const Matrix lhs = Matrix::Identity(N, N) - K;
    const Matrix identity = Matrix::Identity(n, n);
    const Vector rhs = Eigen::Map<const Vector>(identity.data(), N);
    const Vector vecP = lhs.partialPivLu().solve(rhs);
    P = Eigen::Map<const Matrix>(vecP.data(), n, n);
  } else {
    P = Matrix::Identity(n, n);
    Matrix Ak = A;
    for (int it = 0; it < 64; ++it) {
      const Matrix increment = Ak.transpose() * P * Ak;
      P += increment;
      if (increment.norm() <= 1e-16 * P.norm()) break;
      Ak = Ak * Ak;
    }
  }
  return 0.5 * (P + P.transpose());
}

/// Builds the weighted norm for B with contraction target gamma, where
/// rho(B) < gamma < 1. The certificate is sigma = gamma * sqrt(1 - 1/lambda_max(P)),
/// which equals the induced norm of B in ||.||_P.
inline WeightedNorm build_contraction_norm(const Matrix& B, double gamma) {
  if (B.rows() != B.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "B must be square");
  }
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "gamma must lie in (0, 1)");
  }
  const double rho = spectral_radius(B);
  if (rho >= gamma) {
    throw Error(ErrorCode::SpectralRadiusTooLarge,
                "rho(B) = " + std::to_string(rho) + " >= gamma = " + std::to_string(gamma));
  }
  const Matrix A = B / gamma;
  const Matrix P = solve_discrete_lyapunov(A);
  const auto n = B.rows();
  const double residual = (A.transpose() * P * A - P + Matrix::Identity(n, n)).norm();
  if (!std::isfinite(residual) || residual > 1e-9 * std::max(1.0, P.norm())) {
    throw Error(ErrorCode::NumericalFailure,
                "Lyapunov residual " + std::to_string(residual));
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(P, Eigen::EigenvaluesOnly);
  const double lambda_max = eig.eigenvalues().maxCoeff();
  const double sigma = gamma * std::sqrt(std::max(0.0, 1.0 - 1.0 / lambda_max));
  return {P, sigma, gamma};
}

/// gamma = rho + fraction * (1 - rho).
inline double default_gamma(double rho, double fraction = 0.25) {
  return rho + fraction * (1.0 - rho);
}

/// || [ ||X^(1)||, ..., ||X^(p)|| ] ||_2 over the columns of X.
inline double block_norm(const Matrix& X, const WeightedNorm& norm) {
  if (X.rows() != norm.size()) {
    throw Error(ErrorCode::DimensionMismatch, "block rows differ from norm size");
  }
  double total = 0.0;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const auto col = X.col(j);
    total += col.dot(norm.P * col);
  }
  return std::sqrt(total);
}

/// Block 2-norm: the column-wise lifting of ||.||_2, i.e. the Frobenius norm.
inline double block_norm(const Matrix& X) { return X.norm(); }

/// sup ||W x||_P / ||x||_P via the generalized eigenproblem (W^T P W) x = lambda P x.
inline double induced_matrix_norm(const Matrix& W, const WeightedNorm& norm) {
  if (W.rows() != norm.size() || W.cols() != norm.size()) {
    throw Error(ErrorCode::DimensionMismatch, "W differs from norm size");
  }
  const Matrix M = W.transpose() * norm.P * W;
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> eig(0.5 * (M + M.transpose()), norm.P,
                                                       Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::NumericalFailure, "generalized eigensolve failed");
  }
  return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

/// Spectral norm ||W||_2.
inline double induced_matrix_norm(const Matrix& W) {
  if (W.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(W);
  return svd.singularValues()(0);
}

/// Tight norm-equivalence constants with maximizing directions:
/// ||x||_C <= c_r ||x||_R, ||x||_C <= c_2 ||x||_2,
/// ||x||_R <= r_c ||x||_C, ||x||_R <= r_2 ||x||_2.
struct EquivalenceConstants {
  double c_r = 0.0;
  double c_2 = 0.0;
  double r_c = 0.0;
  double r_2 = 0.0;
  Vector argmax_c_r, argmax_c_2, argmax_r_c, argmax_r_2;
};

namespace norms_detail {

/// sqrt of the largest lambda in A x = lambda B x, plus its eigenvector.
inline std::pair<double, Vector> max_ratio(const Matrix& A, const Matrix& B) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> eig(A, B);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::NumericalFailure, "generalized eigensolve failed");
  }
  const auto last = eig.eigenvalues().size() - 1;
  return {std::sqrt(std::max(0.0, eig.eigenvalues()(last))), eig.eigenvectors().col(last)};
}

}  // namespace norms_detail

inline EquivalenceConstants equivalence_constants(const WeightedNorm& norm_R,
                                                  const WeightedNorm& norm_C) {
  if (norm_R.size() != norm_C.size()) {
    throw Error(ErrorCode::DimensionMismatch, "norms differ in dimension");
  }
  const auto n = norm_R.size();
  const Matrix I = Matrix::Identity(n, n);
  EquivalenceConstants out;
  std::tie(out.c_r, out.argmax_c_r) = norms_detail::max_ratio(norm_C.P, norm_R.P);
  std::tie(out.c_2, out.argmax_c_2) = norms_detail::max_ratio(norm_C.P, I);
  std::tie(out.r_c, out.argmax_r_c) = norms_detail::max_ratio(norm_R.P, norm_C.P);
  std::tie(out.r_2, out.argmax_r_2) = norms_detail::max_ratio(norm_R.P, I);
  return out;
}

/// Norms for the residuals B_R and B_C of a mixing pair, plus their
/// equivalence constants.
struct NormSystem {
  WeightedNorm norm_R;
  WeightedNorm norm_C;
  EquivalenceConstants delta;
  double gamma_fraction = 0.25;
};

inline NormSystem build_norm_system(const MixingPair& mixing, double gamma_fraction = 0.25) {
  if (!(gamma_fraction > 0.0 && gamma_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "gamma fraction must lie in (0, 1)");
  }
  NormSystem sys;
  sys.gamma_fraction = gamma_fraction;
  sys.norm_R = build_contraction_norm(mixing.residual_R(),
                                      default_gamma(mixing.rho_R, gamma_fraction));
  sys.norm_C = build_contraction_norm(mixing.residual_C(),
                                      default_gamma(mixing.rho_C, gamma_fraction));
  sys.delta = equivalence_constants(sys.norm_R, sys.norm_C);
  return sys;
}

}  // namespace pushpull
