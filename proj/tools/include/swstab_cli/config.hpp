#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "swstab/certify.hpp"
#include "swstab/digraph.hpp"
#include "swstab/signal.hpp"
#include "swstab/spectral.hpp"

namespace swstab_cli {

/// One subsystem as configured: row-major n x n entries, plus an optional
/// replacement eigenvector basis for matrices the eigensolver classifies as
/// defective (row-major as well, trusted as supplied).
struct SystemConfig {
  int n = 0;
  std::vector<double> values;
  std::optional<std::vector<double>> override_basis;
};

/// Parsed problem description. Optional sections stay unset when the config
/// omits them; commands that need one report the missing piece as an input
/// error rather than defaulting.
struct ProblemConfig {
  int k = 0;
  std::vector<swstab::Edge> edges;
  std::vector<SystemConfig> systems;
  std::optional<swstab::Partition> partition_override;
  std::optional<swstab::SwitchingSignal> signal;
  std::optional<swstab::SignalClassSpec> class_spec;
  swstab::SpectralTolerances tolerances;
  std::uint64_t seed = 0;
  /// User-supplied certificate constants, keyed as documented per criterion.
  std::map<std::string, double> constants;
  /// Closed walks with promised dwell times for the loop-aggregate criterion.
  std::vector<swstab::PromisedLoop> aggregate_loops;
  double zeta = 0.99;
  int horizon = 0;  // 0: derive from the signal or synthesis length
  int trials = 50;
  int synth_length = 50;
  std::optional<std::vector<double>> x0;
  int samples_per_interval = 20;
};

/// Parses and validates a JSON config. Every violation is reported as
/// Error("SchemaError") whose message starts with the offending path, for
/// example "graph.edges[0]: vertex indices are 1-based".
[[nodiscard]] ProblemConfig parse_config(const std::string& text);

/// Digraph from the config's graph section.
[[nodiscard]] swstab::Digraph build_graph(const ProblemConfig& cfg);

/// Eigendecomposes every configured system with the configured tolerances
/// and attaches replacement bases where supplied.
[[nodiscard]] swstab::Ensemble build_ensemble(const ProblemConfig& cfg);

/// Stable/unstable split: the eigenvalue-derived partition, checked against
/// the config override when one is present (Error("PartitionMismatch") on
/// disagreement). Unset when the ensemble admits no stable-first split.
[[nodiscard]] std::optional<swstab::Partition> resolve_partition(const ProblemConfig& cfg,
                                                                 const swstab::Ensemble& ens);

}  // namespace swstab_cli
