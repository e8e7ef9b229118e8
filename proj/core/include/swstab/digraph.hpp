#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace swstab {

/// Directed edge between 1-based vertex ids.
struct Edge {
  int from = 0;
  int to = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Finite digraph on vertices 1..k. At most one edge per ordered pair is
/// stored; self loops are representable. Edges are kept sorted by (from, to).
class Digraph {
 public:
  Digraph() = default;
  Digraph(int vertex_count, std::vector<Edge> edges);

  [[nodiscard]] int vertex_count() const noexcept { return vertex_count_; }
  [[nodiscard]] const std::vector<Edge>& edges() const noexcept { return edges_; }
  [[nodiscard]] bool has_edge(int from, int to) const;

  /// Successors of v in increasing order.
  [[nodiscard]] const std::vector<int>& successors(int v) const;
  [[nodiscard]] int out_degree(int v) const;
  [[nodiscard]] int in_degree(int v) const;

  /// 0/1 adjacency matrix, entry (i-1, j-1) = 1 iff edge i -> j exists.
  [[nodiscard]] Eigen::MatrixXd adjacency_matrix() const;

 private:
  int vertex_count_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> successors_;   // index 0 unused
  std::vector<std::vector<int>> predecessors_; // index 0 unused
};

/// Simple loop, stored in canonical form: vertices[0] is the smallest id on
/// the loop, each consecutive pair (and the wrap-around pair) is an edge, and
/// no vertex repeats. length() counts edges, which equals vertices.size().
struct SimpleLoop {
  std::vector<int> vertices;

  [[nodiscard]] int length() const noexcept { return static_cast<int>(vertices.size()); }
  [[nodiscard]] std::vector<Edge> edges() const;

  friend bool operator==(const SimpleLoop&, const SimpleLoop&) = default;
};

/// Rotate a closed vertex sequence so its smallest id comes first.
/// `cycle` lists the vertices once (no repeated closing vertex).
[[nodiscard]] SimpleLoop canonical_loop(const std::vector<int>& cycle);

/// All simple loops of the graph in canonical form, sorted by length and then
/// lexicographically by vertex sequence. Self loops count (length 1).
[[nodiscard]] std::vector<SimpleLoop> enumerate_simple_loops(const Digraph& g);

/// Upper bound on the simple-loop count: sum of traces of the first k powers
/// of the adjacency matrix. Cheap sanity check for enumeration results.
[[nodiscard]] double simple_loop_count_bound(const Digraph& g);

/// Topological order of an acyclic digraph, sources first; among vertices
/// whose remaining in-degree is zero the smallest id is emitted first.
/// Throws Error("CyclicGraph") when the graph has a directed cycle.
[[nodiscard]] std::vector<int> topological_sort(const Digraph& g);

/// True when a directed path of length >= 1 leads from `from` to `to`.
/// In particular has_path(g, v, v) holds only when v lies on a cycle.
[[nodiscard]] bool has_path(const Digraph& g, int from, int to);

/// Vertex split: ids 1..stable_count are the stable modes, the rest are
/// unstable. The convention matches how subsystem lists are ordered.
struct Partition {
  int stable_count = 0;
};

/// Edge split by source vertex: the stable subgraph keeps every edge whose
/// source is stable, the unstable subgraph the rest. Vertex ids and count are
/// preserved, and the two edge sets partition the original edge set exactly.
/// Requires 1 <= stable_count < vertex_count.
[[nodiscard]] Digraph stable_subgraph(const Digraph& g, Partition part);
[[nodiscard]] Digraph unstable_subgraph(const Digraph& g, Partition part);

/// Outcome of one structural hypothesis test, with a human-readable witness
/// when the test fails (offending vertex or cycle).
struct HypothesisCheck {
  std::string name;
  bool pass = true;
  std::string witness;
};

struct HypothesisReport {
  std::vector<HypothesisCheck> checks;
  bool all_pass = true;
};

/// Structural requirements on a switching graph: "has-loop" (at least one
/// simple loop exists), "positive-outdegree" (every vertex has an outgoing
/// edge), and with a partition also "unstable-reaches-stable" and
/// "stable-reaches-unstable" (every vertex of one class has a directed path
/// into the other class). Collects all failures rather than stopping at the
/// first.
[[nodiscard]] HypothesisReport validate_hypotheses(const Digraph& g,
                                                   std::optional<Partition> part = std::nullopt);

}  // namespace swstab
