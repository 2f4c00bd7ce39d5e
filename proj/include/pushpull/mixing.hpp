#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "pushpull/error.hpp"
#include "pushpull/graph.hpp"

namespace pushpull {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace mixing_detail {

inline constexpr int kDenseLimit = 64;
inline constexpr int kPowerBudget = 100000;
inline constexpr double kPowerTolerance = 1e-12;
inline constexpr double kClampTolerance = 1e-12;
inline constexpr double kNullSingularValue = 1e-9;
inline constexpr double kFixedPointTolerance = 1e-10;

inline void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + " must be square");
  }
}

}  // namespace mixing_detail

/// R_ij = 1/(1 + indeg(i)) for every in-neighbour j of i and for j = i.
inline Matrix row_stochastic_from_graph(const DirectedGraph& g) {
  const int n = g.size();
  Matrix R = Matrix::Zero(n, n);
  for (Vertex i = 0; i < n; ++i) {
    const double w = 1.0 / (1.0 + g.in_degree(i));
    R(i, i) = w;
    for (Vertex j : g.in_neighbors(i)) R(i, j) = w;
  }
  return R;
}

/// C_ij = 1/(1 + outdeg(j)) for every out-neighbour i of j and for i = j.
inline Matrix column_stochastic_from_graph(const DirectedGraph& g) {
  const int n = g.size();
  Matrix C = Matrix::Zero(n, n);
  for (Vertex j = 0; j < n; ++j) {
    const double w = 1.0 / (1.0 + g.out_degree(j));
    C(j, j) = w;
    for (Vertex i : g.out_neighbors(j)) C(i, j) = w;
  }
  return C;
}

/// Graph induced by a nonnegative matrix: (j, i) is an edge iff M_ij > 0, i != j.
inline DirectedGraph graph_of_matrix(const Matrix& M) {
  mixing_detail::require_square(M, "matrix");
  std::vector<Edge> edges;
  for (int i = 0; i < M.rows(); ++i) {
    for (int j = 0; j < M.cols(); ++j) {
      if (i != j && M(i, j) > 0.0) edges.emplace_back(j, i);
    }
  }
  return DirectedGraph(static_cast<int>(M.rows()), std::move(edges));
}

inline double spectral_radius(const Matrix& M) {
  mixing_detail::require_square(M, "matrix");
  Eigen::EigenSolver<Matrix> solver(M, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::NonConvergence, "eigenvalue computation failed");
  }
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

/// rho(M - outer), e.g. outer = 1 u^T / n for the row-stochastic residual.
inline double residual_spectral_radius(const Matrix& M, const Matrix& outer) {
  if (M.rows() != outer.rows() || M.cols() != outer.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "residual operands differ in shape");
  }
  return spectral_radius(M - outer);
}

namespace mixing_detail {

/// Fixed vector of a column-stochastic K (K w = w), nonnegative, summing to n.
/// `structure` is the graph whose root set is the support of w; the
/// power-iteration path uses it for the multiplicity of eigenvalue 1 and
/// iterates on the root-set block only, where K is stochastic and irreducible.
inline Vector stochastic_fixed_vector(const Matrix& K, const DirectedGraph& structure) {
  const auto n = K.rows();
  Vector w;
  if (n <= kDenseLimit) {
    const Matrix defect = Matrix::Identity(n, n) - K;
    Eigen::JacobiSVD<Matrix> svd(defect, Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    const double scale = std::max(1.0, s(0));
    int nullity = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      if (s(i) <= kNullSingularValue * scale) ++nullity;
    }
    if (nullity > 1) {
      throw Error(ErrorCode::EigenvectorNotUnique,
                  "eigenvalue 1 has multiplicity " + std::to_string(nullity));
    }
    if (nullity == 0) {
      throw Error(ErrorCode::NonConvergence, "no eigenvalue at 1 within tolerance");
    }
    w = svd.matrixV().col(n - 1);
  } else {
    const int classes = source_component_count(structure);
    if (classes != 1) {
      throw Error(ErrorCode::EigenvectorNotUnique,
                  "eigenvalue 1 has multiplicity " + std::to_string(classes));
    }
    const VertexSet roots = root_set(structure);
    const auto m = static_cast<Eigen::Index>(roots.size());
    Matrix block(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b) block(a, b) = K(roots[a], roots[b]);
    Vector z = Vector::Constant(m, 1.0);
    bool converged = false;
    for (int it = 0; it < kPowerBudget; ++it) {
      Vector next = block * z;
      const double change = (next - z).lpNorm<Eigen::Infinity>();
      z = std::move(next);
      if (change <= kPowerTolerance * std::max(1.0, z.lpNorm<Eigen::Infinity>())) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      throw Error(ErrorCode::NonConvergence, "power iteration exceeded its budget");
    }
    w = Vector::Zero(n);
    for (Eigen::Index a = 0; a < m; ++a) w(roots[a]) = z(a);
  }

  const double total = w.sum();
  if (std::abs(total) < 1e-300) {
    throw Error(ErrorCode::EigenvectorNotUnique, "fixed vector sums to zero");
  }
  w *= static_cast<double>(n) / total;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(w(i)) < kClampTolerance) {
      w(i) = 0.0;
    } else if (w(i) < 0.0) {
      throw Error(ErrorCode::EigenvectorNotUnique, "fixed vector has a negative entry");
    }
  }
  w *= static_cast<double>(n) / w.sum();

  const double residual = (K * w - w).lpNorm<Eigen::Infinity>();
  if (residual > kFixedPointTolerance * std::max(1.0, w.lpNorm<Eigen::Infinity>())) {
    throw Error(ErrorCode::NonConvergence,
                "fixed-point residual " + std::to_string(residual) + " too large");
  }
  return w;
}

}  // namespace mixing_detail

/// Left Perron vector of a row-stochastic R: u^T R = u^T, u >= 0, sum(u) = n.
/// Its support is exactly the root set of the graph induced by R.
inline Vector left_perron_u(const Matrix& R) {
  mixing_detail::require_square(R, "R");
  return mixing_detail::stochastic_fixed_vector(R.transpose(), graph_of_matrix(R));
}

/// Right Perron vector of a column-stochastic C: C v = v, v >= 0, sum(v) = n.
inline Vector right_perron_v(const Matrix& C) {
  mixing_detail::require_square(C, "C");
  return mixing_detail::stochastic_fixed_vector(C, reverse(graph_of_matrix(C)));
}

struct AssumptionReport {
  bool nonnegative = false;
  bool row_stochastic = false;     // R 1 = 1
  bool column_stochastic = false;  // 1^T C = 1^T
  bool positive_diagonal_R = false;
  bool positive_diagonal_C = false;
  bool spanning_tree_R = false;
  bool spanning_tree_CT = false;
  bool roots_intersect = false;
  VertexSet roots_R;
  VertexSet roots_CT;
  /// Eigen-side quantities; absent when the Perron vectors are not unique.
  std::optional<Vector> u;
  std::optional<Vector> v;
  std::optional<double> u_dot_v;
  bool eigen_positive = false;  // u^T v > 1e-8
  /// Graph-side and eigen-side answers agree (only meaningful when both
  /// spanning-tree clauses hold).
  bool roots_match_eigen = false;

  bool all_pass() const {
    return nonnegative && row_stochastic && column_stochastic && positive_diagonal_R &&
           positive_diagonal_C && spanning_tree_R && spanning_tree_CT && roots_intersect &&
           eigen_positive && roots_match_eigen;
  }
};

inline constexpr double kUvPositivity = 1e-8;

/// Validates the mixing assumptions. Graph reachability and eigenvectors are
/// computed independently so the root-intersection and u^T v answers can be
/// cross-checked.
inline AssumptionReport check_assumptions(const Matrix& R, const Matrix& C,
                                          double tolerance = 1e-12) {
  mixing_detail::require_square(R, "R");
  mixing_detail::require_square(C, "C");
  if (R.rows() != C.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "R and C differ in size");
  }
  const auto n = R.rows();
  AssumptionReport rep;
  rep.nonnegative = (R.array() >= 0.0).all() && (C.array() >= 0.0).all();
  rep.row_stochastic =
      (R.rowwise().sum() - Vector::Ones(n)).lpNorm<Eigen::Infinity>() <= tolerance;
  rep.column_stochastic =
      (C.colwise().sum().transpose() - Vector::Ones(n)).lpNorm<Eigen::Infinity>() <= tolerance;
  rep.positive_diagonal_R = (R.diagonal().array() > 0.0).all();
  rep.positive_diagonal_C = (C.diagonal().array() > 0.0).all();

  rep.roots_R = root_set(graph_of_matrix(R));
  rep.roots_CT = root_set(reverse(graph_of_matrix(C)));
  rep.spanning_tree_R = !rep.roots_R.empty();
  rep.spanning_tree_CT = !rep.roots_CT.empty();
  VertexSet common;
  std::set_intersection(rep.roots_R.begin(), rep.roots_R.end(), rep.roots_CT.begin(),
                        rep.roots_CT.end(), std::back_inserter(common));
  rep.roots_intersect = !common.empty();

  if (rep.nonnegative && rep.row_stochastic && rep.column_stochastic) {
    try {
      rep.u = left_perron_u(R);
      rep.v = right_perron_v(C);
      rep.u_dot_v = rep.u->dot(*rep.v);
      rep.eigen_positive = *rep.u_dot_v > kUvPositivity;
    } catch (const Error&) {
      rep.u.reset();
      rep.v.reset();
      rep.u_dot_v.reset();
    }
  }
  rep.roots_match_eigen = rep.u_dot_v.has_value() && rep.roots_intersect == rep.eigen_positive;
  return rep;
}

/// Validated (R, C) with Perron vectors and residual spectral radii.
struct MixingPair {
  Matrix R;
  Matrix C;
  Vector u;
  Vector v;
  double rho_R = 0.0;
  double rho_C = 0.0;

  int size() const { return static_cast<int>(R.rows()); }
  double u_dot_v() const { return u.dot(v); }
  /// B_R = R - 1 u^T / n
  Matrix residual_R() const {
    const double n = size();
    return R - Vector::Ones(size()) * u.transpose() / n;
  }
  /// B_C = C - v 1^T / n
  Matrix residual_C() const {
    const double n = size();
    return C - v * Vector::Ones(size()).transpose() / n;
  }
};

inline MixingPair make_mixing_pair(Matrix R, Matrix C, double tolerance = 1e-12) {
  const auto report = check_assumptions(R, C, tolerance);
  if (!report.all_pass()) {
    throw Error(ErrorCode::AssumptionViolation, "mixing matrices fail the assumptions");
  }
  MixingPair pair;
  pair.R = std::move(R);
  pair.C = std::move(C);
  pair.u = *report.u;
  pair.v = *report.v;
  pair.rho_R = spectral_radius(pair.residual_R());
  pair.rho_C = spectral_radius(pair.residual_C());
  return pair;
}

inline MixingPair make_mixing_pair(const DirectedGraph& row_graph,
                                   const DirectedGraph& column_graph) {
  return make_mixing_pair(row_stochastic_from_graph(row_graph),
                          column_stochastic_from_graph(column_graph));
}

}  // namespace pushpull
