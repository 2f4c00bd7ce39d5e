#include <catch_amalgamated.hpp>

#include "instances.hpp"
#include "pushpull/analysis.hpp"
#include "pushpull/solver.hpp"

using namespace pushpull;
using namespace testing_support;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

SolverConfig static_config(const MixingPair& mixing, double alpha, Variant variant,
                           long max_iters, double tol) {
  SolverConfig c;
  c.alpha = alpha;
  c.variant = variant;
  c.max_iters = max_iters;
  c.stop_tolerance = tol;
  c.topology = StaticTopology{mixing, std::nullopt};
  return c;
}

MixingPair star_pair() { return make_mixing_pair(star_out(), star_in()); }

}  // namespace

TEST_CASE("initialization") {
  const auto ens = make_quadratic_ensemble(5, 3, 1);
  const Vector x_star = global_optimum(ens);
  const auto at_opt = init(ens, Vector::Ones(5) * x_star.transpose());
  CHECK(at_opt.Y.colwise().sum().norm() < 1e-12);
  CHECK(at_opt.k == 0);

  const auto origin = init(ens, Matrix::Zero(5, 3));
  CHECK(origin.Y == stacked_gradient(ens, Matrix::Zero(5, 3)));
  CHECK(origin.grad == origin.Y);

  const auto one = make_huber_ensemble(1, 2, 3);
  const Vector x0 = (Vector(2) << 0.3, -1).finished();
  CHECK(init(one, x0.transpose()).Y.row(0).transpose() == one.gradient(0, x0));
  CHECK(code_of([&] { init(ens, Matrix::Zero(4, 3)); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("single agent steps are gradient descent") {
  const Matrix one = Matrix::Ones(1, 1);
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto ens = seed % 2 ? make_huber_ensemble(1, 3, seed) : make_quadratic_ensemble(1, 3, seed);
    const double alpha = 1.0 / ens.L();
    auto full = init(ens, Matrix::Constant(1, 3, 5.0));
    auto half = full;
    Vector x = Vector::Constant(3, 5.0);
    for (int k = 0; k < 100; ++k) {
      full = step_push_pull(full, ens, one, one, alpha);
      half = step_push_pull_half(half, ens, one, one, alpha);
      x -= alpha * ens.gradient(0, x);
      CHECK((full.X.row(0).transpose() - x).cwiseAbs().maxCoeff() <= 1e-14 * (1 + x.norm()));
      CHECK(half.X == full.X);
    }
  }
}

TEST_CASE("optimum with zero trackers is a fixed point") {
  const Vector b = (Vector(2) << 1, -1).finished();
  std::vector<QuadraticAgent> agents(4, QuadraticAgent{2.0 * Matrix::Identity(2, 2), b});
  const ObjectiveEnsemble ens(agents, 2, 2);
  const auto mixing = make_mixing_pair(random_strongly_connected(4, 7, 2), random_strongly_connected(4, 6, 3));
  const auto s = init(ens, Vector::Ones(4) * global_optimum(ens).transpose());
  CHECK(s.Y.norm() < 1e-15);
  for (auto step : {step_push_pull, step_push_pull_half}) {
    const auto next = step(s, ens, mixing.R, mixing.C, 0.3);
    CHECK((next.X - s.X).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((next.Y - s.Y).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(next.k == 1);
  }
}

TEST_CASE("tracking identity and gradient bounds hold along iterations") {
  Rng rng(51);
  for (int inst = 0; inst < 10; ++inst) {
    const int n = 2 + static_cast<int>(rng.index(10));
    const int p = 1 + static_cast<int>(rng.index(3));
    const auto mixing = make_mixing_pair(random_sc_graph(n, rng), random_sc_graph(n, rng));
    const auto ens = inst % 2 ? make_huber_ensemble(n, p, rng.next()) : make_quadratic_ensemble(n, p, rng.next());
    const Vector x_star = global_optimum(ens);
    const double nd = n;
    for (Variant v : {Variant::PushPull, Variant::PushPullHalf}) {
      auto s = init(ens, normal_matrix(n, p, rng));
      for (int k = 0; k < 300; ++k) {
        s = v == Variant::PushPull ? step_push_pull(s, ens, mixing.R, mixing.C, 0.05)
                                   : step_push_pull_half(s, ens, mixing.R, mixing.C, 0.05);
        const Matrix fresh = stacked_gradient(ens, s.X);
        REQUIRE((s.grad - fresh).cwiseAbs().maxCoeff() <= 1e-12);
        const double gap = (s.Y.colwise().sum() - fresh.colwise().sum()).cwiseAbs().maxCoeff();
        REQUIRE(gap <= 1e-9 * (1 + fresh.norm()));

        const Vector xbar = s.X.transpose() * mixing.u / nd;
        const Vector ybar = s.Y.colwise().sum().transpose() / nd;
        const Vector g = stacked_gradient(ens, Vector::Ones(n) * xbar.transpose()).colwise().sum().transpose() / nd;
        const double spread = (s.X - Vector::Ones(n) * xbar.transpose()).norm();
        REQUIRE((ybar - g).norm() <= ens.L() / std::sqrt(nd) * spread * (1 + 1e-12) + 1e-14);
        REQUIRE(g.norm() <= ens.L() * (xbar - x_star).norm() * (1 + 1e-12) + 1e-14);
      }
    }
  }
}

TEST_CASE("step errors") {
  const auto ens = make_quadratic_ensemble(3, 2, 1);
  const auto s = init(ens, Matrix::Zero(3, 2));
  CHECK(code_of([&] { step_push_pull(s, ens, Matrix::Identity(2, 2), Matrix::Identity(3, 3), 0.1); }) ==
        ErrorCode::DimensionMismatch);
  const Matrix I = Matrix::Identity(3, 3);
  CHECK(code_of([&] { step_push_pull(s, ens, I, I, std::numeric_limits<double>::infinity()); }) ==
        ErrorCode::NonFiniteIterate);
}

TEST_CASE("static runs") {
  const auto mixing = star_pair();
  const auto ens = make_quadratic_ensemble(4, 2, 5, 1.0, 1.0);
  const auto norms = build_norm_system(mixing);
  const double alpha = step_size_bound(mixing, norms, ens.mu(), ens.L()).alpha_max;

  SECTION("theorem step converges geometrically") {
    const auto trace = run(static_config(mixing, alpha, Variant::PushPull, 100000, 1e-12), ens,
                           Matrix::Zero(4, 2));
    CHECK(trace.converged);
    CHECK_FALSE(trace.diverged);
    CHECK(trace.records.front().residual == 1.0);
    CHECK(trace.final_residual() <= 1e-12);
    CHECK(trace.static_topology);
    CHECK_FALSE(trace.plain_average);
    const auto& r = trace.records;
    const std::size_t burn = r.size() / 4;
    for (std::size_t k = burn; k + 50 < r.size(); k += 50) CHECK(r[k + 50].residual < r[k].residual);
    CHECK(iterations_to(trace, 1e-6).value() < trace.iterations());
  }
  SECTION("huge step is reported as divergence") {
    const auto trace = run(static_config(mixing, 10.0 * 2.0 / ens.mu(), Variant::PushPull, 5000, 0.0),
                           ens, Matrix::Zero(4, 2));
    CHECK(trace.diverged);
    CHECK(trace.records.back().divergence);
    CHECK_FALSE(trace.converged);
  }
  SECTION("config validation") {
    auto bad = static_config(mixing, alpha, Variant::PushPull, 0, 0.0);
    CHECK_THROWS_AS(run(bad, ens, Matrix::Zero(4, 2)), Error);
    bad = static_config(mixing, -1.0, Variant::PushPull, 10, 0.0);
    CHECK_THROWS_AS(run(bad, ens, Matrix::Zero(4, 2)), Error);
    CHECK(code_of([&] {
            run(static_config(mixing, alpha, Variant::PushPull, 10, 0), ens, Matrix::Zero(3, 2));
          }) == ErrorCode::ShapeMismatch);
    MixingPair broken = mixing;
    broken.R = Matrix::Identity(4, 4);
    CHECK(code_of([&] {
            run(static_config(broken, alpha, Variant::PushPull, 10, 0), ens, Matrix::Zero(4, 2));
          }) == ErrorCode::AssumptionViolation);
  }
  SECTION("runs are deterministic and stop at max_iters") {
    const auto cfg = static_config(mixing, alpha, Variant::PushPullHalf, 200, 0.0);
    const auto a = run(cfg, ens, Matrix::Zero(4, 2));
    const auto b = run(cfg, ens, Matrix::Zero(4, 2));
    CHECK(a.iterations() == 200);
    CHECK(a.records.size() == 201);
    for (std::size_t k = 0; k < a.records.size(); ++k) {
      CHECK(a.records[k].residual == b.records[k].residual);
      CHECK(a.records[k].composite == b.records[k].composite);
    }
  }
  SECTION("centralized variant") {
    Rng rng(3);
    auto cfg = static_config(mixing, 0.5, Variant::Centralized, 10000, 1e-20);
    const auto trace = run(cfg, ens, normal_matrix(4, 2, rng));
    CHECK(trace.converged);
    for (const auto& r : trace.records) CHECK(r.consensus_2 == 0.0);
  }
}

TEST_CASE("time-varying runs") {
  const auto base = random_strongly_connected(12, 24, 7);
  const auto ens = make_huber_ensemble(12, 2, 1);
  SolverConfig cfg;
  cfg.alpha = 0.2;
  cfg.variant = Variant::PushPullHalf;
  cfg.max_iters = 20000;
  cfg.stop_tolerance = 1e-10;
  cfg.topology = GraphSequence{base, 0.5, {}, 3};
  const auto trace = run(cfg, ens, Matrix::Zero(12, 2));
  CHECK(trace.converged);
  CHECK_FALSE(trace.static_topology);
  CHECK(trace.plain_average);
  CHECK(std::isnan(trace.records[3].consensus_R));
  CHECK(std::isnan(trace.records[3].tracking_C));
  CHECK(std::isfinite(trace.records[3].consensus_2));
  CHECK_THROWS_AS(check_transition_inequality(trace, build_transition_matrix(NetworkConstants{}, 0.1, 1.1, 0.2)), Error);

  cfg.topology = GraphSequence{random_strongly_connected(5, 8, 1), 0.5, {}, 3};
  CHECK(code_of([&] { run(cfg, ens, Matrix::Zero(12, 2)); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("centralized gradient descent baseline") {
  const auto q = make_quadratic_ensemble(6, 3, 8, 1.0, 2.0);
  const double ap = 2.0 / (q.mu() + q.L());
  const auto errs = centralized_gd(q, Vector::Constant(3, 4.0), ap, 200);
  CHECK(errs.size() == 201);
  for (std::size_t k = 0; k + 1 < errs.size(); ++k) {
    if (errs[k] < 1e-13) break;
    CHECK(errs[k + 1] <= (1 - ap * q.mu()) * errs[k] * (1 + 1e-10));
  }
  const Vector x_star = global_optimum(q);
  const auto still = centralized_gd(q, x_star, ap, 10);
  CHECK(still.back() <= 1e-14);

  const auto hb = make_huber_ensemble(6, 2, 9);
  const auto herr = centralized_gd(hb, Vector::Zero(2), 2.0 / (hb.mu() + hb.L()), 3000);
  for (std::size_t k = 0; k + 1 < herr.size(); ++k) CHECK(herr[k + 1] <= herr[k] + 1e-15);
  CHECK(herr.back() <= 1e-12);

  CHECK(code_of([&] { centralized_gd(q, Vector::Zero(3), 1.01 * ap, 5); }) == ErrorCode::StepSizeOutOfRange);
  CHECK(code_of([&] { centralized_gd(q, Vector::Zero(3), 0.0, 5); }) == ErrorCode::StepSizeOutOfRange);
}

TEST_CASE("variant names") {
  CHECK(parse_variant("push_pull") == Variant::PushPull);
  CHECK(parse_variant("push_pull_half") == Variant::PushPullHalf);
  CHECK(parse_variant("centralized") == Variant::Centralized);
  CHECK(to_string(Variant::PushPullHalf) == "push_pull_half");
  CHECK_THROWS_AS(parse_variant("gossip"), Error);
}
