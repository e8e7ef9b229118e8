#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "swstab/digraph.hpp"

namespace swstab {

/// Finite switching-signal prefix: mode sequence with the time spent in each
/// mode. durations[n] is the time in modes[n] before the switch along edge
/// (modes[n], modes[n+1]). Switch times are the prefix sums, t_0 = 0.
struct SwitchingSignal {
  std::vector<int> modes;
  std::vector<double> durations;

  [[nodiscard]] int length() const noexcept { return static_cast<int>(modes.size()); }
  [[nodiscard]] double total_time() const;
  /// t_0 = 0, t_1, ..., t_N (length() + 1 values).
  [[nodiscard]] std::vector<double> switch_times() const;
};

/// Structural validation: matching array lengths, at least one mode,
/// strictly positive durations. Throws Error("InvalidSignal").
void validate_signal(const SwitchingSignal& sig);

struct AdmissibilityResult {
  bool admissible = true;
  /// 1-based index n of the first pair (modes[n-1], modes[n]) that is not an
  /// edge; 0 when admissible.
  int first_violation = 0;
};

/// True iff every consecutive mode pair follows an edge of g.
[[nodiscard]] AdmissibilityResult check_admissible(const SwitchingSignal& sig, const Digraph& g);

/// One extracted occurrence of a simple loop. edge_indices are 1-based
/// positions n into the signal's edge sequence e_n = (modes[n-1], modes[n]);
/// total_time sums the durations attached to those edges.
struct LoopInstance {
  int loop_id = 0;  // 1-based position in the canonical enumeration order
  SimpleLoop loop;
  std::vector<int> edge_indices;
  double total_time = 0.0;
};

/// Result of the earliest-repeat factorization: loop instances in extraction
/// order plus the indecomposable remainder. Instance edge indices and
/// residual indices partition {1..N-1}; the residual path never repeats a
/// vertex, so its length is at most vertex_count - 1.
struct StandardDecomposition {
  std::vector<LoopInstance> instances;
  std::vector<int> residual_edge_indices;
  /// Vertex sequence of the residual path; a single vertex (the signal's
  /// final mode) when no edges remain.
  std::vector<int> residual_vertices;
};

/// Repeatedly scan the undecomposed edge sequence left to right and extract
/// the segment between the first repeated vertex and its earlier occurrence
/// as one loop instance, restarting the scan after each extraction. Throws
/// Error("InadmissibleSignal") when sig does not follow g.
[[nodiscard]] StandardDecomposition standard_decomposition(const SwitchingSignal& sig,
                                                           const Digraph& g);
/// Variant reusing a precomputed canonical loop list (from
/// enumerate_simple_loops) for instance identification.
[[nodiscard]] StandardDecomposition standard_decomposition(const SwitchingSignal& sig,
                                                           const Digraph& g,
                                                           const std::vector<SimpleLoop>& loops);

/// Minimum duration for every mode.
struct DwellSpec {
  double tau = 0.0;
};
/// Minimum total time per extracted instance of each simple loop, indexed in
/// canonical enumeration order.
struct SimpleLoopDwellSpec {
  std::vector<double> tau;
};
/// Minimum duration in stable modes, maximum duration in unstable modes.
struct DwellFleeSpec {
  double tau = 0.0;
  double eta = 0.0;
};
/// Per extracted instance of loop i: time on stable-source edges >= tau[i],
/// time on unstable-source edges <= eta[i].
struct LoopwiseDwellFleeSpec {
  std::vector<double> tau;
  std::vector<double> eta;
};

using SignalClassSpec =
    std::variant<DwellSpec, SimpleLoopDwellSpec, DwellFleeSpec, LoopwiseDwellFleeSpec>;

/// Throws Error("InvalidClassSpec") unless every parameter is strictly
/// positive and paired arrays have equal length.
void validate_class_spec(const SignalClassSpec& spec);

struct MembershipViolation {
  std::string constraint;
  double slack = 0.0;  // negative amount by which the constraint fails
};

struct MembershipResult {
  bool member = true;
  std::vector<MembershipViolation> violations;
  int checked_constraints = 0;
};

/// Test sig against the class. DwellFlee and LoopwiseDwellFlee need the
/// stable/unstable partition (Error("MissingPartition") otherwise);
/// SimpleLoopDwell requires one tau per simple loop of g.
[[nodiscard]] MembershipResult class_membership(const SwitchingSignal& sig, const Digraph& g,
                                                const SignalClassSpec& spec,
                                                std::optional<Partition> part = std::nullopt);

/// Count of stable and unstable modes among modes[0..prefix-1].
[[nodiscard]] std::pair<int, int> switch_counters(const SwitchingSignal& sig, Partition part,
                                                  int prefix);

/// Deterministic random member of the class: seeded random walk on g, then
/// random durations repaired per violated constraint until class_membership
/// passes. Throws Error("SynthesisFailure") when a constraint cannot be met
/// on the generated path (for example a loop-time floor on a loop with no
/// stable-source edge).
[[nodiscard]] SwitchingSignal synthesize_signal(const Digraph& g, const SignalClassSpec& spec,
                                                int length, std::uint64_t seed,
                                                std::optional<Partition> part = std::nullopt);

}  // namespace swstab
