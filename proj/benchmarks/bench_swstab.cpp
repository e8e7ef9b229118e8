// Microbenchmarks for the hot paths: loop enumeration, signal decomposition,
// the matrix exponential, and the certification pipeline.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "swstab/certify.hpp"
#include "swstab/digraph.hpp"
#include "swstab/signal.hpp"
#include "swstab/simulate.hpp"
#include "swstab/spectral.hpp"

namespace {

using namespace swstab;

/// Deterministic digraph with roughly density * k^2 edges and no self loops.
Digraph dense_digraph(int k, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<Edge> edges;
  for (int i = 1; i <= k; ++i)
    for (int j = 1; j <= k; ++j)
      if (i != j && coin(rng) < density) edges.push_back({i, j});
  // Guarantee positive out-degree so signals can be synthesized on it.
  for (int i = 1; i <= k; ++i) {
    bool has_out = false;
    for (const Edge& e : edges) has_out = has_out || e.from == i;
    if (!has_out) edges.push_back({i, i == 1 ? 2 : 1});
  }
  return Digraph(k, std::move(edges));
}

Eigen::MatrixXd stable_matrix(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> entry(-1.0, 1.0);
  std::uniform_real_distribution<double> rate(0.3, 2.0);
  while (true) {
    Eigen::MatrixXd P(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) P(r, c) = entry(rng);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(P);
    if (svd.singularValues()(n - 1) < 1e-2) continue;
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) d(i) = -rate(rng) - 0.1 * i;
    return P * d.asDiagonal() * P.inverse();
  }
}

Ensemble stable_ensemble(int k, int n, std::uint64_t seed) {
  std::vector<Eigen::MatrixXd> mats;
  mats.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) mats.push_back(stable_matrix(n, seed + static_cast<std::uint64_t>(i)));
  return Ensemble::from_matrices(mats);
}

void BM_EnumerateLoops(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  Digraph g = dense_digraph(k, 0.4, 17);
  for (auto _ : state) {
    auto loops = enumerate_simple_loops(g);
    benchmark::DoNotOptimize(loops);
  }
}
BENCHMARK(BM_EnumerateLoops)->Arg(4)->Arg(6)->Arg(8);

void BM_StandardDecomposition(benchmark::State& state) {
  const int length = static_cast<int>(state.range(0));
  Digraph g = dense_digraph(5, 0.5, 23);
  SwitchingSignal sig = synthesize_signal(g, DwellSpec{0.1}, length, 29);
  auto loops = enumerate_simple_loops(g);
  for (auto _ : state) {
    auto decomp = standard_decomposition(sig, g, loops);
    benchmark::DoNotOptimize(decomp);
  }
}
BENCHMARK(BM_StandardDecomposition)->Arg(100)->Arg(1000)->Arg(5000);

void BM_MatrixExponential(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Eigen::MatrixXd A = stable_matrix(n, 31);
  for (auto _ : state) {
    Eigen::MatrixXd E = matrix_exponential(A, 0.7);
    benchmark::DoNotOptimize(E);
  }
}
BENCHMARK(BM_MatrixExponential)->Arg(2)->Arg(4)->Arg(8);

void BM_ClassicalBounds(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  Digraph g = dense_digraph(k, 0.4, 37);
  Ensemble ens = stable_ensemble(k, 3, 41);
  for (auto _ : state) {
    BoundsReport rep = classical_bounds(ens, g);
    benchmark::DoNotOptimize(rep);
  }
}
BENCHMARK(BM_ClassicalBounds)->Arg(4)->Arg(6);

void BM_CertifyAndSimulate(benchmark::State& state) {
  Digraph g = dense_digraph(4, 0.5, 43);
  Ensemble ens = stable_ensemble(4, 3, 47);
  auto loops = enumerate_simple_loops(g);
  std::vector<double> tau(loops.size());
  for (std::size_t i = 0; i < loops.size(); ++i) tau[i] = 1.05 * nu_loop(ens, loops[i]) + 1e-6;
  SwitchingSignal sig = synthesize_signal(g, SimpleLoopDwellSpec{tau}, 100, 53);
  Eigen::VectorXd x0 = Eigen::VectorXd::Ones(3).normalized();
  for (auto _ : state) {
    StabilityCertificate cert = certify_simple_loop_dwell(ens, g, tau);
    Trajectory traj = simulate(ens, sig, x0, 1);
    benchmark::DoNotOptimize(cert);
    benchmark::DoNotOptimize(traj);
  }
}
BENCHMARK(BM_CertifyAndSimulate);

}  // namespace

BENCHMARK_MAIN();
