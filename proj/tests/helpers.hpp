#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "swstab/digraph.hpp"
#include "swstab/signal.hpp"
#include "swstab/spectral.hpp"

namespace swstab::testing {

/// Brute-force simple-loop enumeration: try every vertex subset and every
/// cyclic arrangement of it, keep the arrangements whose consecutive pairs
/// (wrap included) are all edges. Exponential, fine for k <= 5.
inline std::vector<SimpleLoop> brute_force_loops(const Digraph& g) {
  const int k = g.vertex_count();
  std::set<std::vector<int>> found;
  // Self loops.
  for (int v = 1; v <= k; ++v) {
    if (g.has_edge(v, v)) found.insert({v});
  }
  // Longer loops: fix the smallest vertex first, permute the rest.
  std::vector<int> all(k);
  for (int i = 0; i < k; ++i) all[i] = i + 1;
  for (int mask = 1; mask < (1 << k); ++mask) {
    std::vector<int> subset;
    for (int i = 0; i < k; ++i) {
      if (mask & (1 << i)) subset.push_back(i + 1);
    }
    if (subset.size() < 2) continue;
    std::vector<int> rest(subset.begin() + 1, subset.end());
    std::sort(rest.begin(), rest.end());
    do {
      std::vector<int> cyc;
      cyc.push_back(subset.front());
      cyc.insert(cyc.end(), rest.begin(), rest.end());
      bool ok = true;
      for (std::size_t i = 0; i + 1 < cyc.size() && ok; ++i) {
        ok = g.has_edge(cyc[i], cyc[i + 1]);
      }
      if (ok && g.has_edge(cyc.back(), cyc.front())) found.insert(cyc);
    } while (std::next_permutation(rest.begin(), rest.end()));
  }
  std::vector<SimpleLoop> loops;
  loops.reserve(found.size());
  for (const auto& v : found) loops.push_back(SimpleLoop{v});
  std::sort(loops.begin(), loops.end(), [](const SimpleLoop& a, const SimpleLoop& b) {
    if (a.vertices.size() != b.vertices.size()) return a.vertices.size() < b.vertices.size();
    return a.vertices < b.vertices;
  });
  return loops;
}

/// Floyd-Warshall closure for paths of length >= 1.
inline std::vector<std::vector<bool>> reachability_oracle(const Digraph& g) {
  const int k = g.vertex_count();
  std::vector<std::vector<bool>> reach(k + 1, std::vector<bool>(k + 1, false));
  for (const Edge& e : g.edges()) reach[e.from][e.to] = true;
  for (int m = 1; m <= k; ++m) {
    for (int i = 1; i <= k; ++i) {
      for (int j = 1; j <= k; ++j) {
        if (reach[i][m] && reach[m][j]) reach[i][j] = true;
      }
    }
  }
  return reach;
}

/// Largest singular value by power iteration on M* M.
inline double power_iteration_norm(const Eigen::MatrixXcd& M, int iters = 500) {
  if (M.rows() == 0 || M.cols() == 0) return 0.0;
  Eigen::MatrixXcd G = M.adjoint() * M;
  Eigen::VectorXcd v = Eigen::VectorXcd::Ones(M.cols());
  v.normalize();
  double lambda = 0.0;
  for (int i = 0; i < iters; ++i) {
    Eigen::VectorXcd w = G * v;
    double n = w.norm();
    if (n == 0.0) return 0.0;
    v = w / n;
    lambda = n;
  }
  return std::sqrt(lambda);
}

/// e^{At} through the eigendecomposition of A; valid only for diagonalizable
/// inputs, which the callers arrange.
inline Eigen::MatrixXd eig_expm(const Eigen::MatrixXd& A, double t) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(A);
  Eigen::MatrixXcd P = es.eigenvectors();
  Eigen::VectorXcd d = es.eigenvalues();
  Eigen::MatrixXcd E = Eigen::MatrixXcd::Zero(A.rows(), A.cols());
  for (int i = 0; i < d.size(); ++i) E(i, i) = std::exp(d(i) * t);
  Eigen::MatrixXcd R = P * E * P.inverse();
  return R.real();
}

/// Random digraph without self loops where every vertex has an outgoing
/// edge; edge_prob controls extra density beyond that floor.
inline Digraph random_digraph(std::mt19937_64& rng, int k, double edge_prob = 0.35) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> pick(1, k);
  std::set<std::pair<int, int>> chosen;
  for (int i = 1; i <= k; ++i) {
    for (int j = 1; j <= k; ++j) {
      if (i != j && coin(rng) < edge_prob) chosen.insert({i, j});
    }
  }
  for (int i = 1; i <= k; ++i) {
    bool has_out = false;
    for (const auto& [a, b] : chosen) {
      if (a == i) { has_out = true; break; }
    }
    if (!has_out) {
      int j = pick(rng);
      while (j == i) j = pick(rng);
      chosen.insert({i, j});
    }
  }
  std::vector<Edge> edges;
  for (const auto& [a, b] : chosen) edges.push_back({a, b});
  return Digraph(k, std::move(edges));
}

/// Random basis with bounded condition number (entries in [-1, 1], retried
/// until reasonably conditioned).
inline Eigen::MatrixXd random_basis(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    Eigen::MatrixXd P(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) P(i, j) = u(rng);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(P);
    double smin = svd.singularValues().minCoeff();
    double smax = svd.singularValues().maxCoeff();
    if (smin > 1e-3 && smax / smin < 50.0) return P;
  }
}

/// Hurwitz diagonalizable matrix with distinct real eigenvalues in
/// [-rate_max, -rate_min].
inline Eigen::MatrixXd random_stable_matrix(std::mt19937_64& rng, int n, double rate_min = 0.2,
                                            double rate_max = 2.5) {
  std::uniform_real_distribution<double> u(rate_min, rate_max);
  Eigen::VectorXd d(n);
  for (;;) {
    for (int i = 0; i < n; ++i) d(i) = -u(rng);
    bool distinct = true;
    for (int i = 0; i < n && distinct; ++i)
      for (int j = i + 1; j < n; ++j)
        if (std::abs(d(i) - d(j)) < 1e-2) { distinct = false; break; }
    if (distinct) break;
  }
  Eigen::MatrixXd P = random_basis(rng, n);
  return P * d.asDiagonal() * P.inverse();
}

/// Diagonalizable matrix with distinct real eigenvalues, at least one
/// positive, none within 0.05 of zero.
inline Eigen::MatrixXd random_unstable_matrix(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> mag(0.1, 2.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  Eigen::VectorXd d(n);
  for (;;) {
    for (int i = 0; i < n; ++i) {
      double v = mag(rng);
      d(i) = coin(rng) < 0.5 ? v : -v;
    }
    d(0) = std::abs(d(0));  // force instability
    bool distinct = true;
    for (int i = 0; i < n && distinct; ++i)
      for (int j = i + 1; j < n; ++j)
        if (std::abs(d(i) - d(j)) < 1e-2) { distinct = false; break; }
    if (distinct) break;
  }
  Eigen::MatrixXd P = random_basis(rng, n);
  return P * d.asDiagonal() * P.inverse();
}

/// All-stable random instance: digraph plus matching ensemble.
struct StableInstance {
  Digraph graph;
  Ensemble ensemble;
};

inline StableInstance random_stable_instance(std::mt19937_64& rng, int k_max = 5, int n_max = 3) {
  std::uniform_int_distribution<int> kd(2, k_max);
  std::uniform_int_distribution<int> nd(2, n_max);
  int k = kd(rng);
  int n = nd(rng);
  Digraph g = random_digraph(rng, k);
  std::vector<Eigen::MatrixXd> mats;
  mats.reserve(k);
  for (int i = 0; i < k; ++i) mats.push_back(random_stable_matrix(rng, n));
  return {std::move(g), Ensemble::from_matrices(mats)};
}

/// Mixed instance: vertices 1..r stable, r+1..k unstable, unstable-source
/// edges acyclic by construction (an unstable vertex only feeds stable
/// vertices or higher-id unstable vertices), and the pair (r+1 -> 1, 1 ->
/// r+1) always present so at least one unstable edge and one stable edge
/// into the rescaled region exist.
struct MixedInstance {
  Digraph graph;
  Ensemble ensemble;
  Partition partition;
};

inline MixedInstance random_mixed_instance(std::mt19937_64& rng, int k_max = 6, int n_max = 3) {
  std::uniform_int_distribution<int> kd(3, k_max);
  std::uniform_int_distribution<int> nd(2, n_max);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  int k = kd(rng);
  int n = nd(rng);
  std::uniform_int_distribution<int> rd(1, k - 1);
  int r = rd(rng);
  std::set<std::pair<int, int>> chosen;
  chosen.insert({r + 1, 1});
  chosen.insert({1, r + 1});
  for (int i = 1; i <= k; ++i) {
    for (int j = 1; j <= k; ++j) {
      if (i == j) continue;
      bool i_unstable = i > r;
      bool j_unstable = j > r;
      // Keep the unstable-source subgraph acyclic: unstable -> unstable
      // edges only go to larger ids.
      if (i_unstable && j_unstable && j < i) continue;
      if (coin(rng) < 0.3) chosen.insert({i, j});
    }
  }
  // Every vertex needs an outgoing edge.
  for (int i = 1; i <= k; ++i) {
    bool has_out = false;
    for (const auto& [a, b] : chosen)
      if (a == i) { has_out = true; break; }
    if (!has_out) {
      if (i > r) {
        chosen.insert({i, 1});  // unstable -> stable keeps G_u acyclic
      } else {
        int j = (i == 1) ? 2 : 1;
        chosen.insert({i, j});
      }
    }
  }
  std::vector<Edge> edges;
  for (const auto& [a, b] : chosen) edges.push_back({a, b});
  std::vector<Eigen::MatrixXd> mats;
  mats.reserve(k);
  for (int i = 1; i <= k; ++i) {
    mats.push_back(i <= r ? random_stable_matrix(rng, n) : random_unstable_matrix(rng, n));
  }
  return {Digraph(k, std::move(edges)), Ensemble::from_matrices(mats), Partition{r}};
}

/// Random admissible signal: seeded walk along edges with durations in
/// [d_min, d_max].
inline SwitchingSignal random_signal(std::mt19937_64& rng, const Digraph& g, int length,
                                     double d_min = 0.2, double d_max = 2.0) {
  std::uniform_real_distribution<double> dur(d_min, d_max);
  std::uniform_int_distribution<int> start(1, g.vertex_count());
  SwitchingSignal sig;
  int v = start(rng);
  while (g.out_degree(v) == 0) v = start(rng);
  for (int i = 0; i < length; ++i) {
    sig.modes.push_back(v);
    sig.durations.push_back(dur(rng));
    const auto& succ = g.successors(v);
    if (succ.empty()) break;
    std::uniform_int_distribution<int> pick(0, static_cast<int>(succ.size()) - 1);
    v = succ[pick(rng)];
  }
  return sig;
}

}  // namespace swstab::testing
