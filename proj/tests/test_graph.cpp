#include <catch_amalgamated.hpp>

#include "instances.hpp"
#include "pushpull/graph.hpp"

using namespace pushpull;
using namespace testing_support;

namespace {

// Transitive closure by Warshall's algorithm; reach[a][b] iff b reachable from a.
std::vector<std::vector<bool>> closure(const DirectedGraph& g) {
  const int n = g.size();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (int i = 0; i < n; ++i) reach[i][i] = true;
  for (const auto& [a, b] : g.edges()) reach[a][b] = true;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (reach[i][k] && reach[k][j]) reach[i][j] = true;
  return reach;
}

VertexSet closure_roots(const DirectedGraph& g) {
  const auto reach = closure(g);
  VertexSet roots;
  for (int r = 0; r < g.size(); ++r) {
    if (std::all_of(reach[r].begin(), reach[r].end(), [](bool b) { return b; })) {
      roots.push_back(r);
    }
  }
  return roots;
}

// Source components of the condensation, counted via the closure: a vertex's
// component is a source iff everything that reaches it is reached back.
int closure_source_components(const DirectedGraph& g) {
  const auto reach = closure(g);
  const int n = g.size();
  std::vector<bool> counted(n, false);
  int sources = 0;
  for (int v = 0; v < n; ++v) {
    if (counted[v]) continue;
    bool source = true;
    for (int w = 0; w < n; ++w) {
      if (reach[w][v] && !reach[v][w]) source = false;
    }
    for (int w = 0; w < n; ++w) {
      if (reach[w][v] && reach[v][w]) counted[w] = true;
    }
    if (source) ++sources;
  }
  return sources;
}

DirectedGraph complete(int n) {
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) e.emplace_back(i, j);
  return DirectedGraph(n, e);
}

DirectedGraph random_graph(int n, double p, Rng& rng) {
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && rng.bernoulli(p)) e.emplace_back(i, j);
  return DirectedGraph(n, e);
}

}  // namespace

TEST_CASE("graph construction validates edges") {
  CHECK_THROWS_AS(DirectedGraph(0, {}), Error);
  CHECK_THROWS_AS(DirectedGraph(2, {{0, 2}}), Error);
  CHECK_THROWS_AS(DirectedGraph(2, {{1, 1}}), Error);
  CHECK_THROWS_AS(DirectedGraph(2, {{0, 1}, {0, 1}}), Error);
  const DirectedGraph g(3, {{2, 0}, {0, 1}});
  CHECK(g.edges() == std::vector<Edge>{{0, 1}, {2, 0}});
  CHECK(g.in_degree(0) == 1);
  CHECK(g.out_degree(2) == 1);
  CHECK(g.has_edge(2, 0));
  CHECK_FALSE(g.has_edge(0, 2));
}

TEST_CASE("strong connectivity") {
  CHECK(is_strongly_connected(complete(3)));
  CHECK_FALSE(is_strongly_connected(DirectedGraph(2, {{0, 1}})));
  std::vector<Edge> star;
  for (int i = 1; i < 4; ++i) {
    star.emplace_back(0, i);
    star.emplace_back(i, 0);
  }
  CHECK(is_strongly_connected(DirectedGraph(4, star)));
  CHECK(is_strongly_connected(DirectedGraph(1, {})));
}

TEST_CASE("root sets") {
  CHECK(root_set(DirectedGraph(2, {{0, 1}})) == VertexSet{0});
  CHECK(root_set(complete(4)) == VertexSet{0, 1, 2, 3});
  CHECK(root_set(star_out()) == VertexSet{0});
  CHECK(root_set(star_in()).empty());
  CHECK(root_set(DirectedGraph(3, {})).empty());
}

TEST_CASE("root sets agree with the closure oracle and the condensation") {
  Rng rng(11);
  for (int s = 0; s < 100; ++s) {
    const int n = 1 + static_cast<int>(rng.index(10));
    const auto g = random_graph(n, 0.1 + 0.3 * rng.uniform(), rng);
    const auto roots = root_set(g);
    CHECK(roots == closure_roots(g));
    CHECK(source_component_count(g) == closure_source_components(g));
    CHECK(roots.empty() == (source_component_count(g) != 1));
    CHECK(is_strongly_connected(g) == (static_cast<int>(roots.size()) == n));
    CHECK(has_spanning_tree(g) == !roots.empty());
  }
}

TEST_CASE("reverse") {
  CHECK(reverse(DirectedGraph(3, {})).edge_count() == 0);
  CHECK(reverse(DirectedGraph(2, {{0, 1}})).edges() == std::vector<Edge>{{1, 0}});
  const auto g = random_strongly_connected(12, 30, 5);
  CHECK(reverse(reverse(g)) == g);
  const auto r = reverse(g);
  for (const auto& [a, b] : g.edges()) CHECK(r.has_edge(b, a));
  CHECK(r.edge_count() == g.edge_count());
}

TEST_CASE("random strongly connected generator") {
  const auto g = random_strongly_connected(12, 24, 7);
  CHECK(g.size() == 12);
  CHECK(g.edge_count() == 24);
  CHECK(is_strongly_connected(g));
  CHECK(random_strongly_connected(12, 24, 7) == g);
  CHECK_FALSE(random_strongly_connected(12, 24, 8) == g);

  const auto cycle = random_strongly_connected(3, 3, 0);
  CHECK(cycle.edge_count() == 3);
  CHECK(is_strongly_connected(cycle));
  for (int v = 0; v < 3; ++v) CHECK(cycle.out_degree(v) == 1);

  CHECK(random_strongly_connected(4, 12, 1) == complete(4));
  try {
    random_strongly_connected(2, 1, 0);
    FAIL("expected InfeasibleEdgeCount");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InfeasibleEdgeCount);
  }
  CHECK_THROWS_AS(random_strongly_connected(3, 7, 0), Error);

  Rng rng(12);
  for (int s = 0; s < 50; ++s) {
    const int n = 2 + static_cast<int>(rng.index(15));
    const int m = n + static_cast<int>(rng.index(n * (n - 1) - n + 1));
    const auto h = random_strongly_connected(n, m, rng.next());
    CHECK(static_cast<int>(h.edge_count()) == m);
    CHECK(closure_roots(h).size() == static_cast<std::size_t>(n));
  }
}

TEST_CASE("spanning tree from a root") {
  CHECK(spanning_tree_from_root(star_out(), 0) == star_out());
  const DirectedGraph cycle(3, {{0, 1}, {1, 2}, {2, 0}});
  CHECK(spanning_tree_from_root(cycle, 0).edges() == std::vector<Edge>{{0, 1}, {1, 2}});
  try {
    spanning_tree_from_root(star_out(), 2);
    FAIL("expected NotARoot");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotARoot);
  }
  // Lowest-index parent wins among vertices discovered at the same depth.
  const DirectedGraph diamond(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
  CHECK(spanning_tree_from_root(diamond, 0).has_edge(1, 3));

  Rng rng(13);
  for (int s = 0; s < 50; ++s) {
    const int n = 1 + static_cast<int>(rng.index(12));
    const auto g = rooted_graph(n, static_cast<Vertex>(rng.index(n)), n, rng);
    for (Vertex r : root_set(g)) {
      const auto t = spanning_tree_from_root(g, r);
      CHECK(static_cast<int>(t.edge_count()) == n - 1);
      CHECK(t.in_degree(r) == 0);
      for (Vertex v = 0; v < n; ++v) {
        if (v != r) CHECK(t.in_degree(v) == 1);
      }
      CHECK(root_set(t) == VertexSet{r});
      for (const auto& [a, b] : t.edges()) CHECK(g.has_edge(a, b));
    }
  }
}

TEST_CASE("masked graphs") {
  const auto base = random_strongly_connected(8, 20, 3);
  SECTION("full activation without leaders is the identity") {
    const GraphSequence seq{base, 1.0, {}, 9};
    const auto m = masked_graphs(seq, 4);
    CHECK(m.for_rows == base);
    CHECK(m.for_columns == base);
  }
  SECTION("leaders mask follower-to-leader rows and leader-to-follower columns") {
    const DirectedGraph g(4, {{0, 1}, {1, 0}, {2, 0}, {0, 2}, {2, 3}, {3, 2}, {1, 3}});
    const GraphSequence seq{g, 1.0, {0, 1}, 0};
    seq.validate();
    const auto m = masked_graphs(seq, 0);
    CHECK_FALSE(m.for_rows.has_edge(2, 0));
    CHECK(m.for_rows.has_edge(0, 2));
    CHECK(m.for_rows.has_edge(0, 1));
    CHECK_FALSE(m.for_columns.has_edge(0, 2));
    CHECK_FALSE(m.for_columns.has_edge(1, 3));
    CHECK(m.for_columns.has_edge(2, 0));
    CHECK(m.for_columns.has_edge(2, 3));
  }
  SECTION("deterministic in (seed, k)") {
    const GraphSequence seq{base, 0.5, {}, 3};
    const auto a = masked_graphs(seq, 5);
    const auto b = masked_graphs(seq, 5);
    CHECK(a.for_rows == b.for_rows);
    CHECK(a.for_columns == b.for_columns);
    bool differs = false;
    for (std::uint64_t k = 0; k < 10; ++k) {
      differs = differs || !(masked_graphs(seq, k).for_rows == a.for_rows);
    }
    CHECK(differs);
  }
  SECTION("activation frequency is near the probability") {
    const GraphSequence seq{base, 0.5, {}, 1};
    std::size_t kept = 0;
    for (std::uint64_t k = 0; k < 400; ++k) kept += masked_graphs(seq, k).for_rows.edge_count();
    const double frac = static_cast<double>(kept) / (400.0 * base.edge_count());
    CHECK(frac == Catch::Approx(0.5).margin(0.03));
  }
  SECTION("sequence validation") {
    CHECK_THROWS_AS((GraphSequence{base, 0.0, {}, 0}.validate()), Error);
    CHECK_THROWS_AS((GraphSequence{base, 1.5, {}, 0}.validate()), Error);
    CHECK_THROWS_AS((GraphSequence{base, 0.5, {9}, 0}.validate()), Error);
    const DirectedGraph chain(3, {{0, 1}, {1, 2}, {2, 0}});
    CHECK_THROWS_AS((GraphSequence{chain, 0.5, {0, 1}, 0}.validate()), Error);
    CHECK_NOTHROW(GraphSequence{with_leader_links(chain, {0, 1}), 0.5, {0, 1}, 0}.validate());
  }
}

TEST_CASE("vertex picking and induced subgraphs") {
  const auto picked = pick_vertices(12, 2, 11);
  CHECK(picked.size() == 2);
  CHECK(std::is_sorted(picked.begin(), picked.end()));
  CHECK(pick_vertices(12, 2, 11) == picked);
  const DirectedGraph g(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
  const auto sub = induced_subgraph(g, {1, 2});
  CHECK(sub.size() == 2);
  CHECK(sub.edges() == std::vector<Edge>{{0, 1}});
}
