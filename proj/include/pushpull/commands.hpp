#pragma once

#include <iomanip>
#include <optional>
#include <ostream>
#include <string>

#include <json.hpp>

#include "pushpull/analysis.hpp"
#include "pushpull/experiment.hpp"
#include "pushpull/io.hpp"

namespace pushpull {

/// Process exit statuses of the command-line front-end.
enum ExitCode : int {
  kExitSuccess = 0,
  kExitNotConverged = 1,
  kExitAssumption = 2,
  kExitDivergence = 3,
  kExitInput = 4,
};

inline int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::AssumptionViolation:
    case ErrorCode::EigenvectorNotUnique:
    case ErrorCode::SpectralRadiusTooLarge:
    case ErrorCode::StepSizeOutOfRange:
      return kExitAssumption;
    case ErrorCode::NonFiniteIterate:
      return kExitDivergence;
    default:
      return kExitInput;
  }
}

struct CheckInputs {
  std::optional<std::string> graph_path;        // one graph for both R and C
  std::optional<std::string> column_graph_path; // optional distinct graph for C
  std::optional<std::string> row_matrix_path;
  std::optional<std::string> column_matrix_path;
};

/// Prints the assumption report (JSON) plus residual spectral radii; exit 0
/// iff every clause passes.
inline int cmd_check(const CheckInputs& in, std::ostream& out) {
  Matrix R, C;
  double tolerance = 1e-12;
  if (in.row_matrix_path && in.column_matrix_path) {
    R = io::read_matrix_csv(*in.row_matrix_path);
    C = io::read_matrix_csv(*in.column_matrix_path);
    tolerance = io::kLoadTolerance;
  } else if (in.graph_path) {
    const auto g_rows = io::read_graph(*in.graph_path);
    const auto g_cols = in.column_graph_path ? io::read_graph(*in.column_graph_path) : g_rows;
    R = row_stochastic_from_graph(g_rows);
    C = column_stochastic_from_graph(g_cols);
  } else {
    throw Error(ErrorCode::InvalidArgument, "check needs --graph or both --R and --C");
  }
  const auto report = check_assumptions(R, C, tolerance);
  auto j = io::assumption_report_to_json(report);
  if (report.u && report.v) {
    const double n = static_cast<double>(R.rows());
    const Vector ones = Vector::Ones(R.rows());
    j["rho_R"] = residual_spectral_radius(R, ones * report.u->transpose() / n);
    j["rho_C"] = residual_spectral_radius(C, *report.v * ones.transpose() / n);
  }
  out << j.dump(2) << '\n';
  return report.all_pass() ? kExitSuccess : kExitAssumption;
}

struct Certified {
  StepSizeCertificate certificate;
  TransitionMatrix transition;
};

inline Certified certify(const MixingPair& mixing, const NormSystem& norms,
                         const ObjectiveEnsemble& ens) {
  Certified c;
  c.certificate = step_size_bound(mixing, norms, ens.mu(), ens.L());
  c.transition = build_transition_matrix(mixing, norms, ens.mu(), ens.L(),
                                         c.certificate.alpha_max);
  return c;
}

/// Prints the step-size certificate and the transition matrix at alpha_max.
inline int cmd_bound(const ExperimentConfig& config, std::ostream& out) {
  if (std::holds_alternative<SequenceTopologySpec>(config.topology)) {
    out << "no static certificate: time-varying topologies carry no convergence "
           "certificate\n";
    return kExitAssumption;
  }
  const auto topo = build_topology(config);
  const auto ens = build_objective(config, topo.n);
  const auto cert = certify(*topo.mixing, *topo.norms, ens);
  auto j = io::certificate_to_json(cert.certificate, cert.transition, *topo.norms);
  j["rho_R"] = topo.mixing->rho_R;
  j["rho_C"] = topo.mixing->rho_C;
  out << j.dump(2) << '\n';
  return cert.transition.rho_A < 1.0 ? kExitSuccess : kExitAssumption;
}

struct RunOutcome {
  SolverTrace trace;
  std::optional<ObjectiveEnsemble> ensemble;
  std::optional<Certified> certified;
  std::optional<TransitionCheckReport> transition_check;
  int exit_code = kExitSuccess;
};

/// Resolves alpha, runs the solver from X0 = 0 and (for static push_pull runs
/// whose step passes the alpha' guard) checks the transition inequality.
inline RunOutcome execute(const ExperimentConfig& config, std::optional<double> alpha_override = {}) {
  const auto topo = build_topology(config);
  const auto ens = build_objective(config, topo.n);
  RunOutcome outcome;
  outcome.ensemble = ens;
  if (topo.mixing) outcome.certified = certify(*topo.mixing, *topo.norms, ens);

  double alpha = 0.0;
  if (alpha_override) {
    alpha = *alpha_override;
  } else if (config.alpha.theorem) {
    if (!outcome.certified) {
      throw Error(ErrorCode::AssumptionViolation,
                  "alpha = theorem needs a static topology (no static certificate)");
    }
    alpha = outcome.certified->certificate.alpha_max;
  } else {
    alpha = config.alpha.value;
  }

  SolverConfig sc;
  sc.alpha = alpha;
  sc.variant = config.variant;
  sc.max_iters = config.max_iters;
  sc.stop_tolerance = config.stop_tolerance;
  sc.topology = topo.topology;
  outcome.trace = run(sc, ens, Matrix::Zero(ens.size(), ens.dim()));

  if (topo.mixing && config.variant == Variant::PushPull && !outcome.trace.diverged) {
    try {
      const auto A = build_transition_matrix(*topo.mixing, *topo.norms, ens.mu(), ens.L(), alpha);
      outcome.transition_check = check_transition_inequality(outcome.trace, A);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::StepSizeOutOfRange) throw;
    }
  }
  outcome.exit_code = outcome.trace.diverged    ? kExitDivergence
                      : outcome.trace.converged ? kExitSuccess
                                                : kExitNotConverged;
  return outcome;
}

inline void print_run_summary(const ExperimentConfig& config, const RunOutcome& o,
                              std::ostream& out) {
  const auto& t = o.trace;
  out << "preset/config: " << config.name << '\n'
      << "variant: " << to_string(t.variant) << '\n'
      << "alpha: " << io::format_double(t.alpha) << '\n'
      << "iterations: " << t.iterations() << '\n'
      << "final residual: " << io::format_double(t.final_residual()) << '\n'
      << "converged: " << (t.converged ? "yes" : "no") << '\n'
      << "diverged: " << (t.diverged ? "yes" : "no") << '\n';
  if (t.static_topology) {
    out << "empirical composite rate: " << io::format_double(empirical_rate(t)) << '\n';
  } else {
    out << "time-varying topology: plain-average diagnostics, no certificate\n";
  }
  if (o.certified) {
    out << "certified alpha_max: " << io::format_double(o.certified->certificate.alpha_max)
        << " (binding: " << to_string(o.certified->certificate.binding_term) << ")\n";
  }
  if (o.transition_check) {
    out << "transition inequality: " << o.transition_check->pairs_checked << " steps checked, "
        << o.transition_check->violations << " violations, rho_A = " << io::format_double(o.transition_check->rho_A)
        << '\n';
  } else if (t.static_topology && t.variant == Variant::PushPull && !t.diverged) {
    out << "transition inequality: not applicable (alpha' exceeds 2/(mu+L))\n";
  }
}

/// Runs the config, writes the trace CSV to `csv_path` and the ensemble JSON
/// beside it, and prints a summary.
inline int cmd_run(const ExperimentConfig& config, const std::string& csv_path,
                   std::ostream& out) {
  const auto outcome = execute(config);
  io::write_file(csv_path, io::format_trace_csv(outcome.trace));
  io::write_file(csv_path + ".ensemble.json",
                 io::ensemble_to_json(*outcome.ensemble).dump(2) + "\n");
  print_run_summary(config, outcome, out);
  out << "trace: " << csv_path << '\n';
  return outcome.exit_code;
}

struct SweepEntry {
  double alpha = 0.0;
  std::optional<long> iterations;  // to the stop tolerance
  double final_residual = 0.0;
  bool diverged = false;
};

struct SweepResult {
  std::vector<SweepEntry> entries;
  std::optional<std::size_t> best;  // fewest iterations to tolerance
  std::optional<SolverTrace> best_trace;
};

inline SweepResult sweep(const ExperimentConfig& config) {
  if (config.sweep.empty()) throw Error(ErrorCode::InvalidArgument, "sweep grid is empty");
  SweepResult result;
  for (double alpha : config.sweep) {
    auto outcome = execute(config, alpha);
    SweepEntry e;
    e.alpha = alpha;
    e.diverged = outcome.trace.diverged;
    e.final_residual = outcome.trace.final_residual();
    if (outcome.trace.converged) e.iterations = outcome.trace.iterations();
    result.entries.push_back(e);
    if (e.iterations &&
        (!result.best || *e.iterations < *result.entries[*result.best].iterations)) {
      result.best = result.entries.size() - 1;
      result.best_trace = std::move(outcome.trace);
    }
  }
  return result;
}

/// Step-size sweep: prints one CSV row per grid point and writes the best
/// run's trace to `csv_path`.
inline int cmd_sweep(const ExperimentConfig& config, const std::string& csv_path,
                     std::ostream& out) {
  const auto result = sweep(config);
  out << "alpha,iterations,final_residual,diverged\n";
  for (const auto& e : result.entries) {
    out << io::format_double(e.alpha) << ','
        << (e.iterations ? std::to_string(*e.iterations) : std::string("none")) << ','
        << io::format_double(e.final_residual) << ',' << (e.diverged ? 1 : 0) << '\n';
  }
  if (!result.best) {
    out << "no grid point reached the stop tolerance\n";
    return kExitNotConverged;
  }
  io::write_file(csv_path, io::format_trace_csv(*result.best_trace));
  out << "best alpha: " << io::format_double(result.entries[*result.best].alpha) << " ("
      << *result.entries[*result.best].iterations << " iterations)\n"
      << "trace: " << csv_path << '\n';
  return kExitSuccess;
}

}  // namespace pushpull
