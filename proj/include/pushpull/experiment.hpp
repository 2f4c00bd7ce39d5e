#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pushpull/error.hpp"
#include "pushpull/graph.hpp"
#include "pushpull/io.hpp"
#include "pushpull/mixing.hpp"
#include "pushpull/norms.hpp"
#include "pushpull/objectives.hpp"
#include "pushpull/solver.hpp"

namespace pushpull {

// Topology sources -----------------------------------------------------------

struct RandomTopologySpec {
  int n = 12;
  int m = 24;
  std::uint64_t seed = 7;
};

/// Edge-list file(s). Without `column_path` one graph drives both R and C.
struct FileTopologySpec {
  std::string path;
  std::optional<std::string> column_path;
};

/// Dense R and C loaded from CSV.
struct MatrixTopologySpec {
  std::string row_path;
  std::string column_path;
};

/// Centre 0 pushes decisions to every leaf and pulls trackers from them.
struct StarTopologySpec {
  int n = 4;
};

struct SequenceTopologySpec {
  RandomTopologySpec base;
  double activation = 0.5;
  /// Number of leaders drawn with `leader_seed` (or explicit list).
  int leader_count = 0;
  std::vector<Vertex> leader_list;
  std::uint64_t leader_seed = 11;
  /// Apply leader-follower masking. Leader links are added to the base graph
  /// whenever leaders are present, so masked and unmasked runs share a base.
  bool mask = false;
  std::uint64_t seed = 3;
};

using TopologySpec = std::variant<RandomTopologySpec, FileTopologySpec, MatrixTopologySpec,
                                  StarTopologySpec, SequenceTopologySpec>;

// Objectives -----------------------------------------------------------------

struct QuadraticSpec {
  int p = 2;
  std::uint64_t seed = 1;
  double mu = 1.0;
  double L = 2.0;
};

struct HuberSpec {
  int p = 2;
  std::uint64_t seed = 1;
  double delta = 1.0;
  double reg_mu = 0.1;
};

using ObjectiveSpec = std::variant<QuadraticSpec, HuberSpec>;

/// Step size: a number, or "theorem" for the certified bound.
struct AlphaSpec {
  bool theorem = false;
  double value = 0.0;
};

struct ExperimentConfig {
  std::string name = "custom";
  TopologySpec topology = RandomTopologySpec{};
  ObjectiveSpec objective = QuadraticSpec{};
  Variant variant = Variant::PushPull;
  AlphaSpec alpha{true, 0.0};
  std::vector<double> sweep;
  long max_iters = 10000;
  double stop_tolerance = 1e-12;
  double gamma_fraction = 0.25;
  std::string output = "trace.csv";
};

// JSON <-> config ------------------------------------------------------------

namespace experiment_detail {

using json = nlohmann::json;

inline RandomTopologySpec random_from_json(const json& j) {
  RandomTopologySpec s;
  s.n = j.value("n", s.n);
  s.m = j.value("m", s.m);
  s.seed = j.value("seed", s.seed);
  return s;
}

inline json random_to_json(const RandomTopologySpec& s) {
  return {{"kind", "random"}, {"n", s.n}, {"m", s.m}, {"seed", s.seed}};
}

inline TopologySpec topology_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "random") return random_from_json(j);
  if (kind == "file") {
    FileTopologySpec s;
    s.path = j.at("path").get<std::string>();
    if (j.contains("column_path")) s.column_path = j.at("column_path").get<std::string>();
    return s;
  }
  if (kind == "matrices") {
    return MatrixTopologySpec{j.at("R").get<std::string>(), j.at("C").get<std::string>()};
  }
  if (kind == "star") return StarTopologySpec{j.value("n", 4)};
  if (kind == "sequence") {
    SequenceTopologySpec s;
    s.base = random_from_json(j.at("base"));
    s.activation = j.value("activation", s.activation);
    if (j.contains("leaders")) {
      const auto& l = j.at("leaders");
      if (l.is_array()) {
        s.leader_list = l.get<std::vector<Vertex>>();
      } else {
        s.leader_count = l.get<int>();
      }
    }
    s.leader_seed = j.value("leader_seed", s.leader_seed);
    s.mask = j.value("mask", s.mask);
    s.seed = j.value("seed", s.seed);
    return s;
  }
  throw Error(ErrorCode::ParseError, "unknown topology kind '" + kind + "'");
}

inline json topology_to_json(const TopologySpec& spec) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, RandomTopologySpec>) {
          return random_to_json(s);
        } else if constexpr (std::is_same_v<T, FileTopologySpec>) {
          json j{{"kind", "file"}, {"path", s.path}};
          if (s.column_path) j["column_path"] = *s.column_path;
          return j;
        } else if constexpr (std::is_same_v<T, MatrixTopologySpec>) {
          return {{"kind", "matrices"}, {"R", s.row_path}, {"C", s.column_path}};
        } else if constexpr (std::is_same_v<T, StarTopologySpec>) {
          return {{"kind", "star"}, {"n", s.n}};
        } else {
          json j{{"kind", "sequence"},       {"base", random_to_json(s.base)},
                 {"activation", s.activation}, {"leader_seed", s.leader_seed},
                 {"mask", s.mask},             {"seed", s.seed}};
          if (!s.leader_list.empty()) {
            j["leaders"] = s.leader_list;
          } else {
            j["leaders"] = s.leader_count;
          }
          return j;
        }
      },
      spec);
}

inline ObjectiveSpec objective_from_json(const json& j) {
  const auto family = j.at("family").get<std::string>();
  if (family == "quadratic") {
    QuadraticSpec s;
    s.p = j.value("p", s.p);
    s.seed = j.value("seed", s.seed);
    s.mu = j.value("mu", s.mu);
    s.L = j.value("L", s.L);
    return s;
  }
  if (family == "huber") {
    HuberSpec s;
    s.p = j.value("p", s.p);
    s.seed = j.value("seed", s.seed);
    s.delta = j.value("delta", s.delta);
    s.reg_mu = j.value("reg_mu", s.reg_mu);
    return s;
  }
  throw Error(ErrorCode::ParseError, "unknown objective family '" + family + "'");
}

inline json objective_to_json(const ObjectiveSpec& spec) {
  if (const auto* q = std::get_if<QuadraticSpec>(&spec)) {
    return {{"family", "quadratic"}, {"p", q->p}, {"seed", q->seed}, {"mu", q->mu}, {"L", q->L}};
  }
  const auto& h = std::get<HuberSpec>(spec);
  return {{"family", "huber"},
          {"p", h.p},
          {"seed", h.seed},
          {"delta", h.delta},
          {"reg_mu", h.reg_mu}};
}

}  // namespace experiment_detail

inline AlphaSpec parse_alpha(const std::string& text) {
  if (text == "theorem") return {true, 0.0};
  const double value = io::parse_double(text);
  if (!(value > 0.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be positive");
  return {false, value};
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using namespace experiment_detail;
  try {
    ExperimentConfig c;
    c.name = j.value("name", c.name);
    c.topology = topology_from_json(j.at("topology"));
    c.objective = objective_from_json(j.at("objective"));
    c.variant = parse_variant(j.value("variant", std::string("push_pull")));
    if (j.contains("alpha")) {
      const auto& a = j.at("alpha");
      if (a.is_object()) {
        // {"sweep": [...]}: the grid drives `sweep`; `run` keeps the certified step.
        c.sweep = a.at("sweep").get<std::vector<double>>();
      } else {
        c.alpha = a.is_string() ? parse_alpha(a.get<std::string>())
                                : AlphaSpec{false, a.get<double>()};
        if (!c.alpha.theorem && !(c.alpha.value > 0.0)) {
          throw Error(ErrorCode::InvalidArgument, "alpha must be positive");
        }
      }
    }
    c.sweep = j.value("sweep", c.sweep);
    for (double alpha : c.sweep) {
      if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "sweep values must be positive");
    }
    c.max_iters = j.value("max_iters", c.max_iters);
    c.stop_tolerance = j.value("stop_tolerance", c.stop_tolerance);
    c.gamma_fraction = j.value("gamma_fraction", c.gamma_fraction);
    c.output = j.value("output", c.output);
    if (c.max_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_iters must be >= 1");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  using namespace experiment_detail;
  nlohmann::json j;
  j["name"] = c.name;
  j["topology"] = topology_to_json(c.topology);
  j["objective"] = objective_to_json(c.objective);
  j["variant"] = std::string(to_string(c.variant));
  if (c.alpha.theorem) {
    j["alpha"] = "theorem";
  } else {
    j["alpha"] = c.alpha.value;
  }
  j["sweep"] = c.sweep;
  j["max_iters"] = c.max_iters;
  j["stop_tolerance"] = c.stop_tolerance;
  j["gamma_fraction"] = c.gamma_fraction;
  j["output"] = c.output;
  return j;
}

inline ExperimentConfig load_config(const std::string& path) {
  try {
    return config_from_json(nlohmann::json::parse(io::read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

/// Replaces every seed in the config with `seed`.
inline void override_seed(ExperimentConfig& c, std::uint64_t seed) {
  std::visit(
      [seed](auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, RandomTopologySpec>) {
          s.seed = seed;
        } else if constexpr (std::is_same_v<T, SequenceTopologySpec>) {
          s.base.seed = seed;
          s.leader_seed = seed;
          s.seed = seed;
        }
      },
      c.topology);
  std::visit([seed](auto& o) { o.seed = seed; }, c.objective);
}

// Presets ----------------------------------------------------------------------

inline const std::vector<double>& default_sweep_grid() {
  static const std::vector<double> grid{0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0, 1.2};
  return grid;
}

/// Built-in presets; presets/<name>.json in the repository mirrors these.
inline ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  c.sweep = default_sweep_grid();
  if (name == "static-12") {
    c.topology = RandomTopologySpec{12, 24, 7};
    c.objective = HuberSpec{2, 1, 1.0, 0.1};
    c.variant = Variant::PushPull;
    c.alpha = {false, 0.2};
    c.max_iters = 10000;
    c.stop_tolerance = 1e-10;
    c.output = "static-12.csv";
  } else if (name == "static-12-certified") {
    c.topology = RandomTopologySpec{12, 24, 7};
    c.objective = QuadraticSpec{2, 1, 1.0, 2.0};
    c.variant = Variant::PushPull;
    c.alpha = {true, 0.0};
    c.max_iters = 100000;
    c.stop_tolerance = 1e-12;
    c.output = "static-12-certified.csv";
  } else if (name == "tv-50" || name == "leader-follower") {
    SequenceTopologySpec s;
    s.base = {12, 24, 7};
    s.activation = 0.5;
    s.leader_count = 2;
    s.leader_seed = 11;
    s.seed = 3;
    s.mask = name == "leader-follower";
    c.topology = s;
    c.objective = HuberSpec{2, 1, 1.0, 0.1};
    c.variant = name == "tv-50" ? Variant::PushPullHalf : Variant::PushPull;
    c.alpha = {false, name == "tv-50" ? 0.2 : 0.4};
    c.max_iters = 20000;
    c.stop_tolerance = 1e-10;
    c.output = name + ".csv";
  } else if (name == "star") {
    c.topology = StarTopologySpec{4};
    c.objective = QuadraticSpec{2, 1, 1.0, 2.0};
    c.variant = Variant::PushPull;
    c.alpha = {true, 0.0};
    c.max_iters = 100000;
    c.stop_tolerance = 1e-12;
    c.output = "star.csv";
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown preset '" + name + "'");
  }
  return c;
}

inline std::vector<std::string> preset_names() {
  return {"static-12", "static-12-certified", "tv-50", "leader-follower", "star"};
}

// Building the pieces ----------------------------------------------------------

struct BuiltTopology {
  int n = 0;
  Topology topology;
  /// Static topologies only: the mixing pair and its norms.
  std::optional<MixingPair> mixing;
  std::optional<NormSystem> norms;
};

inline DirectedGraph star_push_graph(int n) {
  std::vector<Edge> edges;
  for (int i = 1; i < n; ++i) edges.emplace_back(0, i);
  return DirectedGraph(n, std::move(edges));
}

inline DirectedGraph star_pull_graph(int n) { return reverse(star_push_graph(n)); }

inline GraphSequence build_sequence(const SequenceTopologySpec& s) {
  GraphSequence seq;
  DirectedGraph base = random_strongly_connected(s.base.n, s.base.m, s.base.seed);
  VertexSet leaders = s.leader_list;
  std::sort(leaders.begin(), leaders.end());
  if (leaders.empty() && s.leader_count > 0) {
    leaders = pick_vertices(base.size(), s.leader_count, s.leader_seed);
  }
  if (!leaders.empty()) base = with_leader_links(base, leaders);
  seq.base = std::move(base);
  seq.activation_probability = s.activation;
  if (s.mask) seq.leaders = leaders;
  seq.seed = s.seed;
  seq.validate();
  return seq;
}

/// Builds the topology. Static sources produce a validated mixing pair
/// (AssumptionViolation otherwise) and its norm system.
inline BuiltTopology build_topology(const ExperimentConfig& c) {
  BuiltTopology out;
  auto finish_static = [&](MixingPair pair) {
    out.n = pair.size();
    out.norms = build_norm_system(pair, c.gamma_fraction);
    out.mixing = pair;
    out.topology = StaticTopology{std::move(pair), out.norms};
  };
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, RandomTopologySpec>) {
          const auto g = random_strongly_connected(s.n, s.m, s.seed);
          finish_static(make_mixing_pair(g, g));
        } else if constexpr (std::is_same_v<T, FileTopologySpec>) {
          const auto g_rows = io::read_graph(s.path);
          const auto g_cols = s.column_path ? io::read_graph(*s.column_path) : g_rows;
          finish_static(make_mixing_pair(g_rows, g_cols));
        } else if constexpr (std::is_same_v<T, MatrixTopologySpec>) {
          finish_static(make_mixing_pair(
              io::read_matrix_csv(s.row_path, io::Stochasticity::Row),
              io::read_matrix_csv(s.column_path, io::Stochasticity::Column), io::kLoadTolerance));
        } else if constexpr (std::is_same_v<T, StarTopologySpec>) {
          finish_static(make_mixing_pair(star_push_graph(s.n), star_pull_graph(s.n)));
        } else {
          auto seq = build_sequence(s);
          out.n = seq.base.size();
          out.topology = std::move(seq);
        }
      },
      c.topology);
  return out;
}

inline ObjectiveEnsemble build_objective(const ExperimentConfig& c, int n) {
  if (const auto* q = std::get_if<QuadraticSpec>(&c.objective)) {
    return make_quadratic_ensemble(n, q->p, q->seed, q->mu, q->L);
  }
  const auto& h = std::get<HuberSpec>(c.objective);
  return make_huber_ensemble(n, h.p, h.seed, h.delta, h.reg_mu);
}

}  // namespace pushpull
