#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pushpull/error.hpp"
#include "pushpull/graph.hpp"
#include "pushpull/mixing.hpp"
#include "pushpull/norms.hpp"
#include "pushpull/objectives.hpp"

namespace pushpull {

enum class Variant {
  PushPull,      // x+ = R(x - a y),  y+ = C(y + g+ - g)
  PushPullHalf,  // x+ = R(x - a y),  y+ = C y + g+ - g
  Centralized,   // x+ = x - a (1/n) sum_i grad f_i(x)
};

constexpr std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::PushPull: return "push_pull";
    case Variant::PushPullHalf: return "push_pull_half";
    case Variant::Centralized: return "centralized";
  }
  return "unknown";
}

inline Variant parse_variant(std::string_view s) {
  if (s == "push_pull") return Variant::PushPull;
  if (s == "push_pull_half") return Variant::PushPullHalf;
  if (s == "centralized") return Variant::Centralized;
  throw Error(ErrorCode::ParseError, "unknown variant '" + std::string(s) + "'");
}

/// Row i of X / Y is agent i's decision / gradient tracker. `grad` caches
/// stacked_gradient(X) so each step evaluates every gradient once.
struct IterateState {
  Matrix X;
  Matrix Y;
  Matrix grad;
  long k = 0;
};

/// Y_0 = grad F(X_0).
inline IterateState init(const ObjectiveEnsemble& ens, const Matrix& X0) {
  IterateState s;
  s.X = X0;
  s.grad = stacked_gradient(ens, X0);
  s.Y = s.grad;
  s.k = 0;
  return s;
}

namespace solver_detail {

inline void require_mixing_shape(const IterateState& s, const Matrix& R, const Matrix& C) {
  const auto n = s.X.rows();
  if (R.rows() != n || R.cols() != n || C.rows() != n || C.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "mixing matrices must be n x n");
  }
}

inline void require_finite(const IterateState& s) {
  if (!s.X.allFinite() || !s.Y.allFinite()) {
    throw Error(ErrorCode::NonFiniteIterate,
                "iterate became non-finite at k=" + std::to_string(s.k));
  }
}

}  // namespace solver_detail

inline IterateState step_push_pull(const IterateState& s, const ObjectiveEnsemble& ens,
                                   const Matrix& R, const Matrix& C, double alpha) {
  solver_detail::require_mixing_shape(s, R, C);
  IterateState next;
  next.X = R * (s.X - alpha * s.Y);
  next.grad = stacked_gradient(ens, next.X);
  next.Y = C * (s.Y + next.grad - s.grad);
  next.k = s.k + 1;
  solver_detail::require_finite(next);
  return next;
}

/// Tracker update without adapt-then-combine: one communication round.
inline IterateState step_push_pull_half(const IterateState& s, const ObjectiveEnsemble& ens,
                                        const Matrix& R, const Matrix& C, double alpha) {
  solver_detail::require_mixing_shape(s, R, C);
  IterateState next;
  next.X = R * (s.X - alpha * s.Y);
  next.grad = stacked_gradient(ens, next.X);
  next.Y = C * s.Y + next.grad - s.grad;
  next.k = s.k + 1;
  solver_detail::require_finite(next);
  return next;
}

struct StaticTopology {
  MixingPair mixing;
  /// Norms used for trace diagnostics; built with the default gamma if absent.
  std::optional<NormSystem> norms;
};

using Topology = std::variant<StaticTopology, GraphSequence>;

struct SolverConfig {
  double alpha = 0.0;
  Variant variant = Variant::PushPull;
  long max_iters = 1000;
  /// Stop once the normalized residual is at or below this value.
  double stop_tolerance = 0.0;
  Topology topology;

  void validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      throw Error(ErrorCode::InvalidArgument, "alpha must be positive and finite");
    }
    if (max_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_iters must be >= 1");
    if (auto* seq = std::get_if<GraphSequence>(&topology)) seq->validate();
  }
};

inline constexpr double kDivergenceResidual = 1e6;

struct TraceRecord {
  long k = 0;
  /// ||X_k - 1 x*^T||_F^2 / ||X_0 - 1 x*^T||_F^2
  double residual = 0.0;
  double consensus_R = 0.0;  // ||X_k - 1 xbar_k||_R
  double consensus_2 = 0.0;  // ||X_k - 1 xbar_k||_2
  double tracking_C = 0.0;   // ||Y_k - v ybar_k||_C
  double optgap = 0.0;       // ||xbar_k - x*||_2
  /// (optgap, consensus_R, tracking_C): the vector the transition matrix acts on.
  std::array<double, 3> composite{};
  bool divergence = false;
};

struct SolverTrace {
  std::vector<TraceRecord> records;
  double alpha = 0.0;
  Variant variant = Variant::PushPull;
  bool static_topology = true;
  /// xbar uses the plain average (time-varying topology: no Perron vector).
  bool plain_average = false;
  bool diverged = false;
  bool converged = false;
  Vector x_star;

  long iterations() const { return records.empty() ? 0 : records.back().k; }
  double final_residual() const {
    return records.empty() ? std::numeric_limits<double>::quiet_NaN() : records.back().residual;
  }
};

/// First iteration whose normalized residual is at or below `threshold`.
inline std::optional<long> iterations_to(const SolverTrace& trace, double threshold) {
  for (const auto& r : trace.records) {
    if (r.residual <= threshold) return r.k;
  }
  return std::nullopt;
}

namespace solver_detail {

struct Diagnostics {
  const Vector* u = nullptr;  // null: plain average
  const Vector* v = nullptr;
  const NormSystem* norms = nullptr;
};

inline TraceRecord record(const IterateState& s, const Vector& x_star, double denom,
                          const Diagnostics& diag) {
  const auto n = s.X.rows();
  const double nd = static_cast<double>(n);
  const Vector ones = Vector::Ones(n);
  TraceRecord r;
  r.k = s.k;
  const Matrix offset = s.X - ones * x_star.transpose();
  const double num = offset.squaredNorm();
  r.residual = denom > 0.0 ? num / denom : num;

  const Vector xbar = diag.u ? Vector(s.X.transpose() * *diag.u / nd)
                             : Vector(s.X.colwise().sum().transpose() / nd);
  const Matrix consensus = s.X - ones * xbar.transpose();
  r.consensus_2 = block_norm(consensus);
  r.optgap = (xbar - x_star).norm();
  if (diag.norms) {
    const Vector ybar = s.Y.colwise().sum().transpose() / nd;
    r.consensus_R = block_norm(consensus, diag.norms->norm_R);
    r.tracking_C = block_norm(s.Y - *diag.v * ybar.transpose(), diag.norms->norm_C);
    r.composite = {r.optgap, r.consensus_R, r.tracking_C};
  } else {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    r.consensus_R = nan;
    r.tracking_C = nan;
    r.composite = {r.optgap, nan, nan};
  }
  return r;
}

}  // namespace solver_detail

/// Runs the configured iteration from X0 until the residual reaches the stop
/// tolerance, max_iters is hit, or the run diverges. Divergence (non-finite
/// iterate or residual above 1e6) ends the run with `diverged` set instead of
/// throwing.
inline SolverTrace run(const SolverConfig& config, const ObjectiveEnsemble& ens,
                       const Matrix& X0) {
  config.validate();
  if (X0.rows() != ens.size() || X0.cols() != ens.dim()) {
    throw Error(ErrorCode::ShapeMismatch, "X0 must be n x p");
  }
  SolverTrace trace;
  trace.alpha = config.alpha;
  trace.variant = config.variant;
  trace.x_star = global_optimum(ens);
  const auto n = ens.size();
  const Vector ones = Vector::Ones(n);
  const double denom = (X0 - ones * trace.x_star.transpose()).squaredNorm();

  const StaticTopology* fixed = std::get_if<StaticTopology>(&config.topology);
  const GraphSequence* sequence = std::get_if<GraphSequence>(&config.topology);
  std::optional<NormSystem> owned_norms;
  solver_detail::Diagnostics diag;
  if (fixed) {
    if (fixed->mixing.size() != n) {
      throw Error(ErrorCode::DimensionMismatch, "topology size differs from ensemble size");
    }
    // Loose stochasticity tolerance: pairs may come from round-tripped CSV files.
    if (!check_assumptions(fixed->mixing.R, fixed->mixing.C, 1e-9).all_pass()) {
      throw Error(ErrorCode::AssumptionViolation, "static topology fails the assumptions");
    }
    if (!fixed->norms) owned_norms = build_norm_system(fixed->mixing);
    diag.u = &fixed->mixing.u;
    diag.v = &fixed->mixing.v;
    diag.norms = fixed->norms ? &*fixed->norms : &*owned_norms;
  } else {
    if (sequence->base.size() != n) {
      throw Error(ErrorCode::DimensionMismatch, "topology size differs from ensemble size");
    }
    trace.static_topology = false;
    trace.plain_average = true;
  }

  IterateState state;
  if (config.variant == Variant::Centralized) {
    const Vector x0 = X0.colwise().sum().transpose() / static_cast<double>(n);
    state = init(ens, ones * x0.transpose());
  } else {
    state = init(ens, X0);
  }

  auto push_record = [&](const IterateState& s) {
    trace.records.push_back(solver_detail::record(s, trace.x_star, denom, diag));
    auto& r = trace.records.back();
    if (!std::isfinite(r.residual) || r.residual > kDivergenceResidual) {
      r.divergence = true;
      trace.diverged = true;
    }
    if (r.residual <= config.stop_tolerance) trace.converged = true;
  };
  push_record(state);

  Matrix R_k, C_k;
  while (!trace.converged && !trace.diverged && state.k < config.max_iters) {
    try {
      if (config.variant == Variant::Centralized) {
        const Vector xbar = state.X.row(0).transpose();
        const Vector g = ens.total_gradient(xbar) / static_cast<double>(n);
        const Vector x_next = xbar - config.alpha * g;
        IterateState next;
        next.X = ones * x_next.transpose();
        next.grad = stacked_gradient(ens, next.X);
        next.Y = next.grad;
        next.k = state.k + 1;
        solver_detail::require_finite(next);
        state = std::move(next);
      } else {
        const Matrix* R = nullptr;
        const Matrix* C = nullptr;
        if (fixed) {
          R = &fixed->mixing.R;
          C = &fixed->mixing.C;
        } else {
          const auto graphs = masked_graphs(*sequence, static_cast<std::uint64_t>(state.k));
          R_k = row_stochastic_from_graph(graphs.for_rows);
          C_k = column_stochastic_from_graph(graphs.for_columns);
          R = &R_k;
          C = &C_k;
        }
        state = config.variant == Variant::PushPull
                    ? step_push_pull(state, ens, *R, *C, config.alpha)
                    : step_push_pull_half(state, ens, *R, *C, config.alpha);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonFiniteIterate) throw;
      TraceRecord r;
      r.k = state.k + 1;
      r.residual = std::numeric_limits<double>::infinity();
      r.divergence = true;
      trace.records.push_back(r);
      trace.diverged = true;
      break;
    }
    push_record(state);
  }
  return trace;
}

/// Centralized gradient descent on the average objective; returns
/// ||x_k - x*||_2 for k = 0..iters.
inline std::vector<double> centralized_gd(const ObjectiveEnsemble& ens, const Vector& x0,
                                          double alpha_prime, long iters) {
  const double limit = 2.0 / (ens.mu() + ens.L());
  if (!(alpha_prime > 0.0 && alpha_prime <= limit)) {
    throw Error(ErrorCode::StepSizeOutOfRange, "need 0 < alpha' <= 2/(mu+L)");
  }
  if (x0.size() != ens.dim()) throw Error(ErrorCode::ShapeMismatch, "x0 must have length p");
  const Vector x_star = global_optimum(ens);
  const double n = ens.size();
  std::vector<double> errors;
  errors.reserve(iters + 1);
  Vector x = x0;
  errors.push_back((x - x_star).norm());
  for (long k = 0; k < iters; ++k) {
    x -= alpha_prime * ens.total_gradient(x) / n;
    errors.push_back((x - x_star).norm());
  }
  return errors;
}

}  // namespace pushpull
