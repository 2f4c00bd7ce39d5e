#include <catch_amalgamated.hpp>

#include "instances.hpp"
#include "pushpull/norms.hpp"

using namespace pushpull;
using namespace testing_support;

namespace {

// P = sum_k (A^T)^k A^k, summed until the terms vanish.
Matrix series_lyapunov(const Matrix& A) {
  const auto n = A.rows();
  Matrix P = Matrix::Zero(n, n);
  Matrix Ak = Matrix::Identity(n, n);
  for (int k = 0; k < 20000; ++k) {
    const Matrix term = Ak.transpose() * Ak;
    P += term;
    if (term.norm() < 1e-18) break;
    Ak = A * Ak;
  }
  return P;
}

// Induced norm through the Cholesky factor P = L L^T: ||L^T W L^{-T}||_2.
double cholesky_induced(const Matrix& W, const Matrix& P) {
  const Eigen::LLT<Matrix> llt(P);
  const Matrix Lt = llt.matrixU();
  const Matrix inv = Lt.inverse();
  return induced_matrix_norm(Lt * W * inv);
}

Matrix random_spd(int n, Rng& rng) {
  const Matrix G = normal_matrix(n, n, rng);
  return G * G.transpose() + Matrix::Identity(n, n);
}

Matrix random_stable(int n, double radius, Rng& rng) {
  Matrix B = normal_matrix(n, n, rng);
  return B * (radius / spectral_radius(B));
}

}  // namespace

TEST_CASE("contraction norm on closed-form cases") {
  const auto zero = build_contraction_norm(Matrix::Zero(3, 3), 0.5);
  CHECK(zero.P.isApprox(Matrix::Identity(3, 3)));
  CHECK(zero.sigma == 0.0);

  // (B/gamma) = (2/3) I: P = I / (1 - 4/9) = 1.8 I, sigma = 0.5.
  const auto half = build_contraction_norm(0.5 * Matrix::Identity(2, 2), 0.75);
  CHECK((half.P - 1.8 * Matrix::Identity(2, 2)).norm() < 1e-12);
  CHECK(half.sigma == Catch::Approx(0.5).epsilon(1e-12));
  CHECK(half.gamma == 0.75);

  const auto big = build_contraction_norm(0.5 * Matrix::Identity(70, 70), 0.75);
  CHECK((big.P - 1.8 * Matrix::Identity(70, 70)).norm() < 1e-10);
  CHECK(big.sigma == Catch::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("contraction norm errors") {
  try {
    build_contraction_norm(0.8 * Matrix::Identity(2, 2), 0.75);
    FAIL("expected SpectralRadiusTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SpectralRadiusTooLarge);
  }
  CHECK_THROWS_AS(build_contraction_norm(Matrix::Zero(2, 3), 0.5), Error);
  CHECK_THROWS_AS(build_contraction_norm(Matrix::Zero(2, 2), 1.0), Error);
}

TEST_CASE("star residual norm certifies its contraction") {
  Matrix R(4, 4);
  R << 1, 0, 0, 0, 0.5, 0.5, 0, 0, 0.5, 0, 0.5, 0, 0.5, 0, 0, 0.5;
  const Vector u = (Vector(4) << 4, 0, 0, 0).finished();
  const Matrix B = R - Vector::Ones(4) * u.transpose() / 4.0;
  const auto norm = build_contraction_norm(B, 0.75);
  CHECK(norm.sigma < 0.75);
  CHECK(norm.sigma >= 0.5 - 1e-12);
  Rng rng(31);
  for (int s = 0; s < 10000; ++s) {
    const Vector x = normal_vector(4, rng);
    REQUIRE(norm(B * x) <= norm.sigma * norm(x) * (1 + 1e-12));
  }
}

TEST_CASE("contraction norm properties on random stable matrices") {
  Rng rng(32);
  for (int s = 0; s < 40; ++s) {
    const int n = 1 + static_cast<int>(rng.index(10));
    const double rho = 0.9 * rng.uniform();
    const Matrix B = random_stable(n, rho, rng);
    const double gamma = default_gamma(rho, 0.05 + 0.9 * rng.uniform());
    const auto norm = build_contraction_norm(B, gamma);
    const Matrix A = B / gamma;
    CHECK((norm.P - series_lyapunov(A)).norm() <= 1e-8 * norm.P.norm());
    CHECK((A.transpose() * norm.P * A - norm.P + Matrix::Identity(n, n)).norm() < 1e-9 * norm.P.norm());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(norm.P);
    CHECK(eig.eigenvalues().minCoeff() >= 1.0 - 1e-10);
    CHECK(norm.sigma >= rho - 1e-10);
    CHECK(norm.sigma < gamma);
    CHECK(induced_matrix_norm(B, norm) == Catch::Approx(norm.sigma).margin(1e-10));
    CHECK(cholesky_induced(B, norm.P) == Catch::Approx(norm.sigma).margin(1e-8));
  }
}

TEST_CASE("certificate tightens as gamma approaches rho") {
  Rng rng(33);
  const Matrix B = random_stable(5, 0.6, rng);
  double previous = 1.0;
  for (double fraction : {0.8, 0.4, 0.2, 0.1, 0.05, 0.01}) {
    const double gamma = default_gamma(0.6, fraction);
    const auto norm = build_contraction_norm(B, gamma);
    CHECK(norm.sigma >= 0.6 - 1e-10);
    CHECK(norm.sigma - 0.6 <= gamma - 0.6);
    CHECK(norm.sigma <= previous + 1e-12);
    previous = norm.sigma;
  }
}

TEST_CASE("block norm") {
  Rng rng(34);
  const auto norm = build_contraction_norm(random_stable(4, 0.5, rng), 0.7);
  CHECK(block_norm(Matrix::Zero(4, 3), norm) == 0.0);
  const Vector x = normal_vector(4, rng);
  CHECK(block_norm(Matrix(x), norm) == Catch::Approx(norm(x)).epsilon(1e-14));
  const Matrix X = normal_matrix(4, 3, rng);
  double sq = 0.0;
  for (int j = 0; j < 3; ++j) sq += norm(X.col(j)) * norm(X.col(j));
  CHECK(block_norm(X, norm) == Catch::Approx(std::sqrt(sq)).epsilon(1e-14));
  CHECK(block_norm(X) == Catch::Approx(std::sqrt((X.array() * X.array()).sum())).epsilon(1e-14));
  CHECK(block_norm(X, WeightedNorm::euclidean(4)) == Catch::Approx(block_norm(X)).epsilon(1e-14));
  CHECK_THROWS_AS(block_norm(Matrix::Zero(3, 2), norm), Error);
}

TEST_CASE("block norm is submultiplicative and exact on outer products") {
  Rng rng(35);
  for (int s = 0; s < 200; ++s) {
    const int n = 1 + static_cast<int>(rng.index(8));
    const int p = 1 + static_cast<int>(rng.index(4));
    const auto norm = build_contraction_norm(random_stable(n, 0.5, rng), 0.8);
    const Matrix W = normal_matrix(n, n, rng);
    const Matrix X = normal_matrix(n, p, rng);
    CHECK(block_norm(W * X, norm) <= induced_matrix_norm(W, norm) * block_norm(X, norm) * (1 + 1e-12));
    CHECK(block_norm(W * X) <= induced_matrix_norm(W) * block_norm(X) * (1 + 1e-12));
    const Vector w = normal_vector(n, rng);
    const Eigen::RowVectorXd row = normal_vector(p, rng).transpose();
    const double lhs = block_norm(w * row, norm);
    CHECK(std::abs(lhs - norm(w) * row.norm()) <= 1e-12 * std::max(1.0, lhs));
  }
}

TEST_CASE("induced matrix norm") {
  Rng rng(36);
  const auto norm = build_contraction_norm(random_stable(5, 0.5, rng), 0.7);
  CHECK(induced_matrix_norm(Matrix::Identity(5, 5), norm) == Catch::Approx(1.0).epsilon(1e-12));
  const Matrix W = normal_matrix(5, 5, rng);
  Eigen::JacobiSVD<Matrix> svd(W);
  CHECK(induced_matrix_norm(W, WeightedNorm::euclidean(5)) ==
        Catch::Approx(svd.singularValues()(0)).epsilon(1e-10));
  CHECK(induced_matrix_norm(W) == Catch::Approx(svd.singularValues()(0)).epsilon(1e-14));
  CHECK(induced_matrix_norm(W, norm) == Catch::Approx(cholesky_induced(W, norm.P)).epsilon(1e-9));
  CHECK_THROWS_AS(induced_matrix_norm(Matrix::Zero(4, 4), norm), Error);
}

TEST_CASE("equivalence constants") {
  const WeightedNorm same{2.0 * Matrix::Identity(3, 3), 0.1, 0.5};
  auto d = equivalence_constants(same, same);
  CHECK(d.c_r == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(d.r_c == Catch::Approx(1.0).epsilon(1e-12));

  const WeightedNorm nr{Matrix::Identity(3, 3), 0.1, 0.5};
  const WeightedNorm nc{4.0 * Matrix::Identity(3, 3), 0.1, 0.5};
  d = equivalence_constants(nr, nc);
  CHECK(d.c_2 == Catch::Approx(2.0).epsilon(1e-12));
  CHECK(d.c_r == Catch::Approx(2.0).epsilon(1e-12));
  CHECK(d.r_c == Catch::Approx(0.5).epsilon(1e-12));
  CHECK(d.r_2 == Catch::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(equivalence_constants(nr, WeightedNorm::euclidean(2)), Error);

  Rng rng(37);
  for (int s = 0; s < 10; ++s) {
    const int n = 2 + static_cast<int>(rng.index(6));
    const WeightedNorm a{random_spd(n, rng), 0.0, 0.0};
    const WeightedNorm b{random_spd(n, rng), 0.0, 0.0};
    const auto c = equivalence_constants(a, b);
    for (int k = 0; k < 10000; ++k) {
      const Vector x = normal_vector(n, rng);
      REQUIRE(b(x) <= c.c_r * a(x) * (1 + 1e-10));
      REQUIRE(b(x) <= c.c_2 * x.norm() * (1 + 1e-10));
      REQUIRE(a(x) <= c.r_c * b(x) * (1 + 1e-10));
      REQUIRE(a(x) <= c.r_2 * x.norm() * (1 + 1e-10));
    }
    const auto& x1 = c.argmax_c_r;
    CHECK(b(x1) / a(x1) == Catch::Approx(c.c_r).epsilon(1e-8));
    const auto& x2 = c.argmax_c_2;
    CHECK(b(x2) / x2.norm() == Catch::Approx(c.c_2).epsilon(1e-8));
    const auto& x3 = c.argmax_r_c;
    CHECK(a(x3) / b(x3) == Catch::Approx(c.r_c).epsilon(1e-8));
    const auto& x4 = c.argmax_r_2;
    CHECK(a(x4) / x4.norm() == Catch::Approx(c.r_2).epsilon(1e-8));
  }
}

TEST_CASE("norm system of a mixing pair") {
  Rng rng(38);
  const auto mixing = make_mixing_pair(random_sc_graph(8, rng), random_sc_graph(8, rng));
  const auto sys = build_norm_system(mixing);
  CHECK(sys.norm_R.gamma == Catch::Approx(default_gamma(mixing.rho_R)));
  CHECK(sys.norm_C.gamma == Catch::Approx(default_gamma(mixing.rho_C)));
  CHECK(sys.norm_R.sigma < 1.0);
  CHECK(sys.norm_C.sigma < 1.0);
  CHECK(sys.norm_R.sigma >= mixing.rho_R - 1e-10);
  CHECK(sys.delta.c_2 >= 1.0);
  CHECK(sys.delta.r_2 >= 1.0);
  CHECK_THROWS_AS(build_norm_system(mixing, 1.0), Error);
}
