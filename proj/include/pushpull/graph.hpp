#pragma once

#include <algorithm>
#include <cstdint>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pushpull/error.hpp"
#include "pushpull/random.hpp"

namespace pushpull {

using Vertex = int;
/// Edge (from, to): information flows from `from` into `to`.
using Edge = std::pair<Vertex, Vertex>;
using VertexSet = std::vector<Vertex>;  // sorted ascending

/// Immutable directed graph on vertices 0..n-1. Self-loops are never stored;
/// every vertex is implicitly its own in-neighbour when weights are built.
class DirectedGraph {
 public:
  DirectedGraph() = default;

  DirectedGraph(int n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
    if (n <= 0) {
      throw Error(ErrorCode::InvalidArgument, "graph needs at least one vertex");
    }
    std::sort(edges_.begin(), edges_.end());
    for (const auto& [from, to] : edges_) {
      if (from < 0 || from >= n || to < 0 || to >= n) {
        throw Error(ErrorCode::InvalidArgument,
                    "edge (" + std::to_string(from) + "," + std::to_string(to) +
                        ") out of range");
      }
      if (from == to) {
        throw Error(ErrorCode::InvalidArgument, "self-loops are implicit");
      }
    }
    if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end()) {
      throw Error(ErrorCode::InvalidArgument, "duplicate edge");
    }
    out_.assign(n_, {});
    in_.assign(n_, {});
    for (const auto& [from, to] : edges_) {
      out_[from].push_back(to);
      in_[to].push_back(from);
    }
    for (auto& list : in_) std::sort(list.begin(), list.end());
  }

  int size() const { return n_; }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Vertex>& out_neighbors(Vertex v) const { return out_[v]; }
  const std::vector<Vertex>& in_neighbors(Vertex v) const { return in_[v]; }
  int in_degree(Vertex v) const { return static_cast<int>(in_[v].size()); }
  int out_degree(Vertex v) const { return static_cast<int>(out_[v].size()); }

  bool has_edge(Vertex from, Vertex to) const {
    return std::binary_search(edges_.begin(), edges_.end(), Edge{from, to});
  }

  friend bool operator==(const DirectedGraph& a, const DirectedGraph& b) {
    return a.n_ == b.n_ && a.edges_ == b.edges_;
  }

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<Vertex>> out_;
  std::vector<std::vector<Vertex>> in_;
};

/// Vertices reachable from `source` (including itself), as a membership mask.
inline std::vector<bool> reachable_from(const DirectedGraph& g, Vertex source) {
  std::vector<bool> seen(g.size(), false);
  std::vector<Vertex> stack{source};
  seen[source] = true;
  while (!stack.empty()) {
    const Vertex v = stack.back();
    stack.pop_back();
    for (Vertex w : g.out_neighbors(v)) {
      if (!seen[w]) {
        seen[w] = true;
        stack.push_back(w);
      }
    }
  }
  return seen;
}

/// Roots of directed spanning trees: vertices from which every vertex is
/// reachable. Empty when the graph has no spanning tree.
inline VertexSet root_set(const DirectedGraph& g) {
  VertexSet roots;
  for (Vertex r = 0; r < g.size(); ++r) {
    const auto seen = reachable_from(g, r);
    if (std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
      roots.push_back(r);
    }
  }
  return roots;
}

inline bool has_spanning_tree(const DirectedGraph& g) { return !root_set(g).empty(); }

inline bool is_strongly_connected(const DirectedGraph& g) {
  return static_cast<int>(root_set(g).size()) == g.size();
}

/// Strongly connected components (Tarjan, iterative). Returns a component
/// index per vertex; components are numbered in reverse topological order of
/// the condensation (sinks first).
inline std::vector<int> strongly_connected_components(const DirectedGraph& g,
                                                      int* component_count = nullptr) {
  const int n = g.size();
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<Vertex> stack;
  int next_index = 0, next_comp = 0;

  struct Frame {
    Vertex v;
    std::size_t child;
  };
  for (Vertex start = 0; start < n; ++start) {
    if (index[start] != -1) continue;
    std::vector<Frame> call{{start, 0}};
    index[start] = low[start] = next_index++;
    stack.push_back(start);
    on_stack[start] = true;
    while (!call.empty()) {
      auto& frame = call.back();
      const auto& succ = g.out_neighbors(frame.v);
      if (frame.child < succ.size()) {
        const Vertex w = succ[frame.child++];
        if (index[w] == -1) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = true;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[frame.v] = std::min(low[frame.v], index[w]);
        }
        continue;
      }
      const Vertex v = frame.v;
      if (low[v] == index[v]) {
        Vertex w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = next_comp;
        } while (w != v);
        ++next_comp;
      }
      call.pop_back();
      if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
    }
  }
  if (component_count) *component_count = next_comp;
  return comp;
}

/// Number of strongly connected components with no incoming edge from another
/// component. A spanning tree exists iff this is exactly one.
inline int source_component_count(const DirectedGraph& g) {
  int count = 0;
  const auto comp = strongly_connected_components(g, &count);
  std::vector<bool> has_incoming(count, false);
  for (const auto& [from, to] : g.edges()) {
    if (comp[from] != comp[to]) has_incoming[comp[to]] = true;
  }
  return static_cast<int>(std::count(has_incoming.begin(), has_incoming.end(), false));
}

inline DirectedGraph reverse(const DirectedGraph& g) {
  std::vector<Edge> edges;
  edges.reserve(g.edge_count());
  for (const auto& [from, to] : g.edges()) edges.emplace_back(to, from);
  return DirectedGraph(g.size(), std::move(edges));
}

/// Random strongly connected digraph with exactly `m` edges: a random
/// Hamiltonian cycle plus `m - n` distinct extra edges.
inline DirectedGraph random_strongly_connected(int n, int m, std::uint64_t seed) {
  if (n < 1 || m < n || static_cast<long>(m) > static_cast<long>(n) * (n - 1)) {
    throw Error(ErrorCode::InfeasibleEdgeCount,
                "need n <= m <= n(n-1), got n=" + std::to_string(n) +
                    " m=" + std::to_string(m));
  }
  Rng rng(seed);
  std::vector<Vertex> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);

  std::vector<Edge> edges;
  edges.reserve(m);
  std::set<Edge> used;
  for (int i = 0; i < n; ++i) {
    Edge e{order[i], order[(i + 1) % n]};
    edges.push_back(e);
    used.insert(e);
  }
  std::vector<Edge> candidates;
  for (Vertex a = 0; a < n; ++a) {
    for (Vertex b = 0; b < n; ++b) {
      if (a != b && !used.count({a, b})) candidates.emplace_back(a, b);
    }
  }
  // Partial Fisher-Yates: the first m-n slots become the extra edges.
  for (int i = 0; i < m - n; ++i) {
    const auto j = i + rng.index(candidates.size() - i);
    std::swap(candidates[i], candidates[j]);
    edges.push_back(candidates[i]);
  }
  return DirectedGraph(n, std::move(edges));
}

/// Breadth-first spanning tree rooted at `root`, lowest index first.
inline DirectedGraph spanning_tree_from_root(const DirectedGraph& g, Vertex root) {
  if (root < 0 || root >= g.size()) {
    throw Error(ErrorCode::NotARoot, "vertex out of range");
  }
  const auto seen = reachable_from(g, root);
  if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
    throw Error(ErrorCode::NotARoot, "vertex " + std::to_string(root) +
                                         " does not reach every vertex");
  }
  std::vector<bool> visited(g.size(), false);
  std::queue<Vertex> frontier;
  std::vector<Edge> tree;
  visited[root] = true;
  frontier.push(root);
  while (!frontier.empty()) {
    const Vertex v = frontier.front();
    frontier.pop();
    for (Vertex w : g.out_neighbors(v)) {  // sorted: edges_ is sorted by (from, to)
      if (!visited[w]) {
        visited[w] = true;
        tree.emplace_back(v, w);
        frontier.push(w);
      }
    }
  }
  return DirectedGraph(g.size(), std::move(tree));
}

/// Subgraph induced on `vertices`, relabelled 0..k-1 in ascending order.
inline DirectedGraph induced_subgraph(const DirectedGraph& g, const VertexSet& vertices) {
  std::vector<int> label(g.size(), -1);
  for (std::size_t i = 0; i < vertices.size(); ++i) label[vertices[i]] = static_cast<int>(i);
  std::vector<Edge> edges;
  for (const auto& [from, to] : g.edges()) {
    if (label[from] >= 0 && label[to] >= 0) edges.emplace_back(label[from], label[to]);
  }
  return DirectedGraph(static_cast<int>(vertices.size()), std::move(edges));
}

/// Adds a directed cycle through the leaders (ascending order) so that the
/// leader subnet is strongly connected. Existing edges are kept.
inline DirectedGraph with_leader_links(const DirectedGraph& g, const VertexSet& leaders) {
  std::set<Edge> edges(g.edges().begin(), g.edges().end());
  if (leaders.size() >= 2) {
    for (std::size_t i = 0; i < leaders.size(); ++i) {
      edges.insert({leaders[i], leaders[(i + 1) % leaders.size()]});
    }
  }
  return DirectedGraph(g.size(), std::vector<Edge>(edges.begin(), edges.end()));
}

/// `count` distinct vertices chosen uniformly at random, sorted.
inline VertexSet pick_vertices(int n, int count, std::uint64_t seed) {
  if (count < 0 || count > n) {
    throw Error(ErrorCode::InvalidArgument, "cannot pick " + std::to_string(count) +
                                                " of " + std::to_string(n) + " vertices");
  }
  Rng rng(seed);
  std::vector<Vertex> all(n);
  for (int i = 0; i < n; ++i) all[i] = i;
  rng.shuffle(all);
  VertexSet chosen(all.begin(), all.begin() + count);
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

/// Topology source for time-varying runs: random link activation on a base
/// graph, optionally with leader-follower masking.
struct GraphSequence {
  DirectedGraph base;
  double activation_probability = 1.0;
  VertexSet leaders;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(activation_probability > 0.0 && activation_probability <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "activation probability must be in (0,1]");
    }
    for (Vertex l : leaders) {
      if (l < 0 || l >= base.size()) {
        throw Error(ErrorCode::InvalidArgument, "leader out of range");
      }
    }
    if (!std::is_sorted(leaders.begin(), leaders.end()) ||
        std::adjacent_find(leaders.begin(), leaders.end()) != leaders.end()) {
      throw Error(ErrorCode::InvalidArgument, "leader set must be sorted and distinct");
    }
    if (!leaders.empty() && !is_strongly_connected(induced_subgraph(base, leaders))) {
      throw Error(ErrorCode::InvalidArgument, "leader subnet is not strongly connected");
    }
  }
};

struct MaskedGraphs {
  DirectedGraph for_rows;     // drives the x-update (R_k)
  DirectedGraph for_columns;  // drives the y-update (C_k)
};

/// Graphs active at iteration k. Each base edge is kept independently with
/// the activation probability (the same draw serves both graphs). With
/// leaders, the row graph drops follower->leader edges and the column graph
/// drops leader->follower edges.
inline MaskedGraphs masked_graphs(const GraphSequence& seq, std::uint64_t k) {
  const int n = seq.base.size();
  std::vector<bool> is_leader(n, false);
  for (Vertex l : seq.leaders) is_leader[l] = true;

  Rng rng({seq.seed, k});
  std::vector<Edge> rows, cols;
  for (const auto& e : seq.base.edges()) {
    if (!rng.bernoulli(seq.activation_probability)) continue;
    const auto [from, to] = e;
    if (seq.leaders.empty()) {
      rows.push_back(e);
      cols.push_back(e);
      continue;
    }
    if (!(is_leader[to] && !is_leader[from])) rows.push_back(e);
    if (!(is_leader[from] && !is_leader[to])) cols.push_back(e);
  }
  return {DirectedGraph(n, std::move(rows)), DirectedGraph(n, std::move(cols))};
}

}  // namespace pushpull
