#include "swstab/digraph.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <sstream>

#include "swstab/errors.hpp"

namespace swstab {

Digraph::Digraph(int vertex_count, std::vector<Edge> edges) : vertex_count_(vertex_count) {
  if (vertex_count < 1) {
    throw_input("InvalidGraph", "vertex count must be positive, got " + std::to_string(vertex_count));
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  for (const Edge& e : edges) {
    if (e.from < 1 || e.from > vertex_count || e.to < 1 || e.to > vertex_count) {
      std::ostringstream msg;
      msg << "edge (" << e.from << ", " << e.to << ") out of range for " << vertex_count << " vertices";
      throw_input("InvalidGraph", msg.str());
    }
  }
  edges_ = std::move(edges);
  successors_.assign(static_cast<size_t>(vertex_count) + 1, {});
  predecessors_.assign(static_cast<size_t>(vertex_count) + 1, {});
  for (const Edge& e : edges_) {
    successors_[static_cast<size_t>(e.from)].push_back(e.to);
    predecessors_[static_cast<size_t>(e.to)].push_back(e.from);
  }
}

bool Digraph::has_edge(int from, int to) const {
  return std::binary_search(edges_.begin(), edges_.end(), Edge{from, to});
}

const std::vector<int>& Digraph::successors(int v) const {
  if (v < 1 || v > vertex_count_) {
    throw_input("InvalidGraph", "vertex " + std::to_string(v) + " out of range");
  }
  return successors_[static_cast<size_t>(v)];
}

int Digraph::out_degree(int v) const { return static_cast<int>(successors(v).size()); }

int Digraph::in_degree(int v) const {
  if (v < 1 || v > vertex_count_) {
    throw_input("InvalidGraph", "vertex " + std::to_string(v) + " out of range");
  }
  return static_cast<int>(predecessors_[static_cast<size_t>(v)].size());
}

Eigen::MatrixXd Digraph::adjacency_matrix() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(vertex_count_, vertex_count_);
  for (const Edge& e : edges_) {
    a(e.from - 1, e.to - 1) = 1.0;
  }
  return a;
}

std::vector<Edge> SimpleLoop::edges() const {
  std::vector<Edge> out;
  out.reserve(vertices.size());
  for (size_t m = 0; m < vertices.size(); ++m) {
    out.push_back(Edge{vertices[m], vertices[(m + 1) % vertices.size()]});
  }
  return out;
}

SimpleLoop canonical_loop(const std::vector<int>& cycle) {
  if (cycle.empty()) {
    throw_input("InvalidLoop", "empty vertex sequence");
  }
  auto min_it = std::min_element(cycle.begin(), cycle.end());
  SimpleLoop loop;
  loop.vertices.reserve(cycle.size());
  loop.vertices.insert(loop.vertices.end(), min_it, cycle.end());
  loop.vertices.insert(loop.vertices.end(), cycle.begin(), min_it);
  return loop;
}

namespace {

// Backtracking enumeration: grow a path of distinct vertices from a root and
// record a loop whenever an edge returns to the root. Restricting successors
// to ids > root makes the root the loop minimum, so each loop appears once.
void extend_loops(const Digraph& g, int root, std::vector<int>& path,
                  std::vector<char>& on_path, std::vector<SimpleLoop>& out) {
  const int v = path.back();
  for (int w : g.successors(v)) {
    if (w == root) {
      out.push_back(SimpleLoop{path});
    } else if (w > root && !on_path[static_cast<size_t>(w)]) {
      on_path[static_cast<size_t>(w)] = 1;
      path.push_back(w);
      extend_loops(g, root, path, on_path, out);
      path.pop_back();
      on_path[static_cast<size_t>(w)] = 0;
    }
  }
}

}  // namespace

std::vector<SimpleLoop> enumerate_simple_loops(const Digraph& g) {
  std::vector<SimpleLoop> out;
  std::vector<char> on_path(static_cast<size_t>(g.vertex_count()) + 1, 0);
  std::vector<int> path;
  for (int root = 1; root <= g.vertex_count(); ++root) {
    path.assign(1, root);
    on_path[static_cast<size_t>(root)] = 1;
    extend_loops(g, root, path, on_path, out);
    on_path[static_cast<size_t>(root)] = 0;
  }
  std::sort(out.begin(), out.end(), [](const SimpleLoop& a, const SimpleLoop& b) {
    if (a.vertices.size() != b.vertices.size()) return a.vertices.size() < b.vertices.size();
    return a.vertices < b.vertices;
  });
  return out;
}

double simple_loop_count_bound(const Digraph& g) {
  const Eigen::MatrixXd a = g.adjacency_matrix();
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(g.vertex_count(), g.vertex_count());
  double bound = 0.0;
  for (int r = 1; r <= g.vertex_count(); ++r) {
    power = power * a;
    bound += power.trace();
  }
  return bound;
}

std::vector<int> topological_sort(const Digraph& g) {
  std::vector<int> remaining_in(static_cast<size_t>(g.vertex_count()) + 1, 0);
  for (const Edge& e : g.edges()) {
    ++remaining_in[static_cast<size_t>(e.to)];
  }
  // Min-heap keyed by vertex id: deterministic source-first order.
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (int v = 1; v <= g.vertex_count(); ++v) {
    if (remaining_in[static_cast<size_t>(v)] == 0) ready.push(v);
  }
  std::vector<int> order;
  order.reserve(static_cast<size_t>(g.vertex_count()));
  while (!ready.empty()) {
    const int v = ready.top();
    ready.pop();
    order.push_back(v);
    for (int w : g.successors(v)) {
      if (--remaining_in[static_cast<size_t>(w)] == 0) ready.push(w);
    }
  }
  if (order.size() != static_cast<size_t>(g.vertex_count())) {
    throw_numerical("CyclicGraph", "graph has a directed cycle; no topological order exists");
  }
  return order;
}

bool has_path(const Digraph& g, int from, int to) {
  if (from < 1 || from > g.vertex_count() || to < 1 || to > g.vertex_count()) {
    throw_input("InvalidGraph", "path query vertex out of range");
  }
  std::vector<char> seen(static_cast<size_t>(g.vertex_count()) + 1, 0);
  std::queue<int> frontier;
  // Seed with successors so the empty path from `from` to itself never counts.
  for (int w : g.successors(from)) {
    if (!seen[static_cast<size_t>(w)]) {
      seen[static_cast<size_t>(w)] = 1;
      frontier.push(w);
    }
  }
  while (!frontier.empty()) {
    const int v = frontier.front();
    frontier.pop();
    if (v == to) return true;
    for (int w : g.successors(v)) {
      if (!seen[static_cast<size_t>(w)]) {
        seen[static_cast<size_t>(w)] = 1;
        frontier.push(w);
      }
    }
  }
  return false;
}

namespace {

void check_partition(const Digraph& g, Partition part) {
  if (part.stable_count < 1 || part.stable_count >= g.vertex_count()) {
    throw_input("InvalidPartition",
                "stable count must lie in [1, " + std::to_string(g.vertex_count() - 1) +
                    "], got " + std::to_string(part.stable_count));
  }
}

}  // namespace

Digraph stable_subgraph(const Digraph& g, Partition part) {
  check_partition(g, part);
  std::vector<Edge> kept;
  for (const Edge& e : g.edges()) {
    if (e.from <= part.stable_count) kept.push_back(e);
  }
  return Digraph(g.vertex_count(), std::move(kept));
}

Digraph unstable_subgraph(const Digraph& g, Partition part) {
  check_partition(g, part);
  std::vector<Edge> kept;
  for (const Edge& e : g.edges()) {
    if (e.from > part.stable_count) kept.push_back(e);
  }
  return Digraph(g.vertex_count(), std::move(kept));
}

HypothesisReport validate_hypotheses(const Digraph& g, std::optional<Partition> part) {
  HypothesisReport report;

  {
    HypothesisCheck check{"has-loop", true, ""};
    const auto loops = enumerate_simple_loops(g);
    if (loops.empty()) {
      check.pass = false;
      check.witness = "graph is acyclic";
    }
    report.checks.push_back(std::move(check));
  }

  {
    HypothesisCheck check{"positive-outdegree", true, ""};
    for (int v = 1; v <= g.vertex_count(); ++v) {
      if (g.out_degree(v) == 0) {
        check.pass = false;
        check.witness = "vertex " + std::to_string(v) + " has no outgoing edge";
        break;
      }
    }
    report.checks.push_back(std::move(check));
  }

  if (part) {
    check_partition(g, *part);
    const int r = part->stable_count;

    HypothesisCheck to_stable{"unstable-reaches-stable", true, ""};
    for (int v = r + 1; v <= g.vertex_count(); ++v) {
      bool reaches = false;
      for (int s = 1; s <= r && !reaches; ++s) {
        reaches = has_path(g, v, s);
      }
      if (!reaches) {
        to_stable.pass = false;
        to_stable.witness = "unstable vertex " + std::to_string(v) + " reaches no stable vertex";
        break;
      }
    }
    report.checks.push_back(std::move(to_stable));

    HypothesisCheck to_unstable{"stable-reaches-unstable", true, ""};
    for (int v = 1; v <= r; ++v) {
      bool reaches = false;
      for (int u = r + 1; u <= g.vertex_count() && !reaches; ++u) {
        reaches = has_path(g, v, u);
      }
      if (!reaches) {
        to_unstable.pass = false;
        to_unstable.witness = "stable vertex " + std::to_string(v) + " reaches no unstable vertex";
        break;
      }
    }
    report.checks.push_back(std::move(to_unstable));
  }

  report.all_pass = std::all_of(report.checks.begin(), report.checks.end(),
                                [](const HypothesisCheck& c) { return c.pass; });
  return report;
}

}  // namespace swstab
