#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "pushpull/analysis.hpp"
#include "pushpull/error.hpp"
#include "pushpull/graph.hpp"
#include "pushpull/mixing.hpp"
#include "pushpull/objectives.hpp"
#include "pushpull/solver.hpp"

namespace pushpull::io {

using json = nlohmann::json;

/// Shortest round-trip decimal form of a double ("nan"/"inf" for specials).
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

inline double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw Error(ErrorCode::ParseError, "not a number: '" + std::string(text) + "'");
  }
  return value;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << content;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

// ---------------------------------------------------------------------------
// Graph edge lists: "n m" then m lines "from to", 0-indexed.

inline DirectedGraph parse_graph(const std::string& text) {
  std::istringstream in(text);
  long n = 0, m = 0;
  if (!(in >> n >> m) || n <= 0 || m < 0) {
    throw Error(ErrorCode::ParseError, "graph header must be 'n m'");
  }
  std::vector<Edge> edges;
  edges.reserve(m);
  for (long i = 0; i < m; ++i) {
    long from = 0, to = 0;
    if (!(in >> from >> to)) {
      throw Error(ErrorCode::ParseError, "expected " + std::to_string(m) + " edges");
    }
    edges.emplace_back(static_cast<Vertex>(from), static_cast<Vertex>(to));
  }
  std::string trailing;
  if (in >> trailing) throw Error(ErrorCode::ParseError, "unexpected trailing content");
  try {
    return DirectedGraph(static_cast<int>(n), std::move(edges));
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

inline std::string format_graph(const DirectedGraph& g) {
  std::ostringstream out;
  out << g.size() << ' ' << g.edge_count() << '\n';
  for (const auto& [from, to] : g.edges()) out << from << ' ' << to << '\n';
  return out.str();
}

inline DirectedGraph read_graph(const std::string& path) { return parse_graph(read_file(path)); }
inline void write_graph(const std::string& path, const DirectedGraph& g) {
  write_file(path, format_graph(g));
}

// ---------------------------------------------------------------------------
// Dense matrices as CSV, one row per line.

enum class Stochasticity { None, Row, Column };

inline constexpr double kLoadTolerance = 1e-9;

inline Matrix parse_matrix_csv(const std::string& text,
                               Stochasticity expect = Stochasticity::None) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      row.push_back(parse_double(std::string_view(line).substr(
          start, comma == std::string::npos ? std::string::npos : comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(row));
  }
  const auto n = rows.size();
  if (n == 0) throw Error(ErrorCode::ParseError, "empty matrix");
  Matrix M(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n) {
      throw Error(ErrorCode::ParseError, "matrix must be square (row " + std::to_string(i) +
                                             " has " + std::to_string(rows[i].size()) +
                                             " entries)");
    }
    for (std::size_t j = 0; j < n; ++j) M(i, j) = rows[i][j];
  }
  if (!M.allFinite() || (M.array() < 0.0).any()) {
    throw Error(ErrorCode::ParseError, "matrix entries must be finite and nonnegative");
  }
  const Vector ones = Vector::Ones(n);
  if (expect == Stochasticity::Row &&
      (M.rowwise().sum() - ones).lpNorm<Eigen::Infinity>() > kLoadTolerance) {
    throw Error(ErrorCode::ParseError, "rows do not sum to 1");
  }
  if (expect == Stochasticity::Column &&
      (M.colwise().sum().transpose() - ones).lpNorm<Eigen::Infinity>() > kLoadTolerance) {
    throw Error(ErrorCode::ParseError, "columns do not sum to 1");
  }
  return M;
}

inline std::string format_matrix_csv(const Matrix& M) {
  std::string out;
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j) out += ',';
      out += format_double(M(i, j));
    }
    out += '\n';
  }
  return out;
}

inline Matrix read_matrix_csv(const std::string& path,
                              Stochasticity expect = Stochasticity::None) {
  return parse_matrix_csv(read_file(path), expect);
}
inline void write_matrix_csv(const std::string& path, const Matrix& M) {
  write_file(path, format_matrix_csv(M));
}

// ---------------------------------------------------------------------------
// Solver traces.

inline constexpr const char* kTraceHeader =
    "k,residual,consensus_R,consensus_2,tracking_C,optgap,comp1,comp2,comp3,divergence_flag";

inline void write_trace_csv(std::ostream& out, const SolverTrace& trace) {
  out << kTraceHeader << '\n';
  for (const auto& r : trace.records) {
    out << r.k << ',' << format_double(r.residual) << ',' << format_double(r.consensus_R) << ','
        << format_double(r.consensus_2) << ',' << format_double(r.tracking_C) << ','
        << format_double(r.optgap) << ',' << format_double(r.composite[0]) << ','
        << format_double(r.composite[1]) << ',' << format_double(r.composite[2]) << ','
        << (r.divergence ? 1 : 0) << '\n';
  }
}

inline std::string format_trace_csv(const SolverTrace& trace) {
  std::ostringstream out;
  write_trace_csv(out, trace);
  return out.str();
}

// ---------------------------------------------------------------------------
// Objective ensembles.

inline json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vector vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

inline json matrix_to_json(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) rows.push_back(vector_to_json(M.row(i).transpose()));
  return rows;
}

inline Matrix matrix_from_json(const json& j) {
  const auto n = static_cast<Eigen::Index>(j.size());
  if (n == 0) throw Error(ErrorCode::ParseError, "empty matrix");
  const auto m = static_cast<Eigen::Index>(j.at(0).size());
  Matrix M(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector row = vector_from_json(j.at(i));
    if (row.size() != m) throw Error(ErrorCode::ParseError, "ragged matrix");
    M.row(i) = row.transpose();
  }
  return M;
}

inline json ensemble_to_json(const ObjectiveEnsemble& ens) {
  json j;
  j["seed"] = ens.seed();
  j["mu"] = ens.mu();
  j["L"] = ens.L();
  j["n"] = ens.size();
  j["p"] = ens.dim();
  json agents = json::array();
  if (ens.family() == ObjectiveFamily::Quadratic) {
    j["family"] = "quadratic";
    for (const auto& a : ens.quadratic_agents()) {
      agents.push_back({{"A", matrix_to_json(a.A)}, {"b", vector_to_json(a.b)}});
    }
  } else {
    j["family"] = "huber";
    for (const auto& a : ens.huber_agents()) {
      agents.push_back({{"center", vector_to_json(a.center)},
                        {"huber_delta", a.huber_delta},
                        {"reg_mu", a.reg_mu}});
    }
  }
  j["agents"] = std::move(agents);
  return j;
}

inline ObjectiveEnsemble ensemble_from_json(const json& j) {
  try {
    const std::string family = j.at("family").get<std::string>();
    const double mu = j.at("mu").get<double>();
    const double L = j.at("L").get<double>();
    const auto seed = j.value("seed", std::uint64_t{0});
    if (family == "quadratic") {
      std::vector<QuadraticAgent> agents;
      for (const auto& a : j.at("agents")) {
        agents.push_back({matrix_from_json(a.at("A")), vector_from_json(a.at("b"))});
      }
      return ObjectiveEnsemble(std::move(agents), mu, L, seed);
    }
    if (family == "huber") {
      std::vector<HuberAgent> agents;
      for (const auto& a : j.at("agents")) {
        agents.push_back({vector_from_json(a.at("center")), a.at("huber_delta").get<double>(),
                          a.at("reg_mu").get<double>()});
      }
      return ObjectiveEnsemble(std::move(agents), mu, L, seed);
    }
    throw Error(ErrorCode::ParseError, "unknown family '" + family + "'");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

// ---------------------------------------------------------------------------
// Reports.

inline json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline json assumption_report_to_json(const AssumptionReport& rep) {
  json j;
  j["nonnegative"] = rep.nonnegative;
  j["row_stochastic"] = rep.row_stochastic;
  j["column_stochastic"] = rep.column_stochastic;
  j["positive_diagonal_R"] = rep.positive_diagonal_R;
  j["positive_diagonal_C"] = rep.positive_diagonal_C;
  j["spanning_tree_R"] = rep.spanning_tree_R;
  j["spanning_tree_CT"] = rep.spanning_tree_CT;
  j["roots_intersect"] = rep.roots_intersect;
  j["roots_R"] = rep.roots_R;
  j["roots_CT"] = rep.roots_CT;
  j["u"] = rep.u ? vector_to_json(*rep.u) : json(nullptr);
  j["v"] = rep.v ? vector_to_json(*rep.v) : json(nullptr);
  j["u_dot_v"] = rep.u_dot_v ? json(*rep.u_dot_v) : json(nullptr);
  j["eigen_positive"] = rep.eigen_positive;
  j["roots_match_eigen"] = rep.roots_match_eigen;
  j["all_pass"] = rep.all_pass();
  return j;
}

inline json certificate_to_json(const StepSizeCertificate& cert, const TransitionMatrix& A,
                                const NormSystem& norms) {
  json j;
  json entries = json::array();
  for (int r = 0; r < 3; ++r) {
    json row = json::array();
    for (int c = 0; c < 3; ++c) row.push_back(A.a(r, c));
    entries.push_back(std::move(row));
  }
  j["A"] = std::move(entries);
  j["alpha"] = A.alpha;
  j["alpha_prime"] = A.alpha_prime;
  j["rho_A"] = A.rho_A;
  j["c1"] = cert.c1;
  j["c2"] = cert.c2;
  j["c3"] = cert.c3;
  j["alpha_max"] = cert.alpha_max;
  j["binding_term"] = std::string(to_string(cert.binding_term));
  j["candidate_terms"] = {finite_or_null(cert.terms[0]), finite_or_null(cert.terms[1]),
                          finite_or_null(cert.terms[2]), finite_or_null(cert.terms[3])};
  j["norm_gamma"] = {{"R", cert.norm_gamma_R}, {"C", cert.norm_gamma_C},
                     {"fraction", norms.gamma_fraction}};
  j["sigma_R"] = norms.norm_R.sigma;
  j["sigma_C"] = norms.norm_C.sigma;
  j["delta"] = {{"C_R", norms.delta.c_r},
                {"C_2", norms.delta.c_2},
                {"R_C", norms.delta.r_c},
                {"R_2", norms.delta.r_2}};
  const auto& k = cert.constants;
  j["mu"] = cert.mu;
  j["L"] = cert.L;
  j["n"] = k.n;
  j["u_dot_v"] = k.u_dot_v;
  j["norm_u_minus_1_2"] = k.u_minus_1;
  j["norm_v_minus_1_R"] = k.v_minus_1_R;
  j["norm_R_2"] = k.R_norm;
  j["norm_R_minus_I_2"] = k.R_minus_I;
  j["norm_Rv_2"] = k.Rv_norm;
  return j;
}

}  // namespace pushpull::io
