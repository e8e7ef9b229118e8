#pragma once

#include <optional>
#include <string>
#include <vector>

#include "swstab/digraph.hpp"
#include "swstab/signal.hpp"
#include "swstab/spectral.hpp"

namespace swstab {

/// Dwell threshold of one simple loop: sum of the edge transition costs
/// divided by the smallest decay rate among the edge sources. Requires every
/// source on the loop stable (Error("UnstableSource")) with a usable basis at
/// both edge endpoints (Error("DefectiveEndpoint")). Self loops cost 0.
[[nodiscard]] double nu_loop(const Ensemble& ens, const SimpleLoop& loop);

/// Same threshold for an arbitrary closed walk given as its vertex sequence
/// (first vertex implicit as successor of the last); vertices may repeat.
[[nodiscard]] double nu_walk(const Ensemble& ens, const std::vector<int>& walk);

/// Per-loop certificate data. Quantities that need an unavailable basis or a
/// decay rate are left unset with the reason recorded.
struct LoopBound {
  SimpleLoop loop;
  bool available = true;
  std::string unavailable_reason;
  double cost_sum = 0.0;    // sum of edge transition costs = ln of the factor product
  double lambda_sum = 0.0;  // sum of decay rates over stable-source edges
  double mu_sum = 0.0;      // sum of growth rates over unstable-source edges
  double lambda_min = 0.0;  // smallest decay rate on the loop (0 when none)
  double mu_max = 0.0;      // largest growth rate on the loop (0 when none)
  std::optional<double> nu;           // cost_sum / lambda_min, all-stable loops
  std::optional<double> cycle_ratio;  // cost_sum / lambda_sum, all-stable loops
};

struct EdgeCost {
  Edge edge;
  bool available = true;
  double cost = 0.0;  // ln of the switch factor
};

/// Classical dwell-time quantities plus the graph constants the mixed-case
/// certificates use. A quantity whose definition ranges over edges or loops
/// touching an unusable basis is reported as a partial maximum (when some
/// clean terms remain) or left unset, never silently defaulted; warnings
/// record what was skipped.
struct BoundsReport {
  std::vector<LoopBound> loops;  // canonical enumeration order
  std::vector<EdgeCost> edge_costs;
  std::optional<double> mu_G;        // max edge cost / source decay rate
  std::optional<double> rho_star;    // max loop cycle ratio
  std::optional<double> rho2_star;   // max symmetric pairwise edge ratio
  bool rho_star_partial = false;
  bool rho2_star_partial = false;
  std::optional<double> rho;   // max ||P_j^{-1}|| ||P_i|| over path-joined pairs
  std::optional<double> rho1;  // max switch factor over stable-source edges
  std::optional<double> rho2;  // max switch factor over unstable-source edges
  std::vector<std::string> warnings;
};

[[nodiscard]] BoundsReport classical_bounds(const Ensemble& ens, const Digraph& g);

enum class Verdict { Certified, NotCertified };

/// One strict inequality of a certificate: holds iff value < threshold.
struct Inequality {
  std::string label;
  double value = 0.0;
  double threshold = 0.0;
  double margin = 0.0;  // threshold - value
  bool holds = false;
};

struct StabilityCertificate {
  std::string criterion;
  Verdict verdict = Verdict::NotCertified;
  double margin = 0.0;  // smallest margin across inequalities
  std::vector<Inequality> inequalities;
  std::vector<std::string> assumptions;
  std::vector<std::string> warnings;
};

/// Every loop's dwell floor must strictly exceed its nu threshold; tau is
/// indexed by canonical loop order and must have one entry per simple loop.
/// Requires a graph with at least one loop and an all-stable ensemble
/// (Error("HypothesisViolation") otherwise).
[[nodiscard]] StabilityCertificate certify_simple_loop_dwell(const Ensemble& ens, const Digraph& g,
                                                             const std::vector<double>& tau);

/// Closed walk with a caller-promised total dwell time.
struct PromisedLoop {
  std::vector<int> walk;
  double promised_time = 0.0;
};

/// Certifies each supplied closed walk against its nu threshold
/// (promised_time > nu_walk). Only the supplied walks are checked. Throws
/// Error("NotALoop") when a walk does not follow edges of g.
[[nodiscard]] StabilityCertificate certify_loop_aggregate(const Ensemble& ens, const Digraph& g,
                                                          const std::vector<PromisedLoop>& loops);

/// Constants of the uniform ring condition ln rho - (sum lambda) tau +
/// (sum mu) eta < 0. Computable from an ensemble or supplied directly.
struct RingConstants {
  double log_rho = 0.0;     // sum of edge costs around the ring
  double lambda_sum = 0.0;  // sum of stable decay rates
  double mu_sum = 0.0;      // sum of unstable growth rates
};

[[nodiscard]] RingConstants ring_constants(const Ensemble& ens, const Digraph& g, Partition part);
[[nodiscard]] StabilityCertificate certify_ring_uniform(const RingConstants& c, double tau,
                                                        double eta);
[[nodiscard]] StabilityCertificate certify_ring_uniform(const Ensemble& ens, const Digraph& g,
                                                        Partition part, double tau, double eta);

/// Constants of the per-traversal ring condition ln rho - lambda tau_1 +
/// mu eta_1 < 0 with lambda = min stable decay, mu = max unstable growth.
struct RingLoopwiseConstants {
  double log_rho = 0.0;
  double lambda_min = 0.0;
  double mu_max = 0.0;
};

[[nodiscard]] RingLoopwiseConstants ring_loopwise_constants(const Ensemble& ens, const Digraph& g,
                                                            Partition part);
[[nodiscard]] StabilityCertificate certify_ring_loopwise(const RingLoopwiseConstants& c,
                                                         double tau1, double eta1);
[[nodiscard]] StabilityCertificate certify_ring_loopwise(const Ensemble& ens, const Digraph& g,
                                                         Partition part, double tau1, double eta1);

/// Bipartite stable/unstable graph: ln rho1 + ln rho2 - lambda tau + mu eta
/// < 0 with rho1/rho2 the largest switch factors over stable-/unstable-source
/// edges. Throws Error("NotBipartite") when any edge stays inside one class.
[[nodiscard]] StabilityCertificate certify_bipartite(const Ensemble& ens, const Digraph& g,
                                                     Partition part, double tau, double eta);

/// Per simple loop s_i: ln rho_i - lambda_i tau + mu_i eta < 0 with sum-form
/// lambda_i, mu_i over the loop's stable-/unstable-source edges.
[[nodiscard]] StabilityCertificate certify_general_uniform(const Ensemble& ens, const Digraph& g,
                                                           Partition part, double tau, double eta);

/// Per simple loop s_i with its own pair (tau_i, eta_i): ln rho_i -
/// (min decay on s_i) tau_i + (max growth on s_i) eta_i < 0.
[[nodiscard]] StabilityCertificate certify_general_loopwise(const Ensemble& ens, const Digraph& g,
                                                            Partition part,
                                                            const std::vector<double>& tau,
                                                            const std::vector<double>& eta);

/// Constants of the switch-count criterion. lambda is the minimum stable
/// decay, mu the maximum unstable growth; rho1/rho2 as in the bipartite case
/// but over the whole edge set split by source class.
struct SwitchCountConstants {
  double log_rho1 = 0.0;
  double log_rho2 = 0.0;
  double lambda = 0.0;
  double mu = 0.0;
};

struct SwitchCountResult {
  StabilityCertificate certificate;
  /// E(m) = N_s(m)(ln rho1 - lambda tau) + N_u(m)(ln rho2 + mu eta), m = 1..horizon.
  std::vector<double> series;
  /// Limit switch-ratio floor N_s/N_u > (ln rho2 + mu eta)/(lambda tau - ln rho1),
  /// reported when the denominator is positive.
  std::optional<double> threshold_ratio;
  /// Least-squares slope of E(m) over the last half of the horizon.
  double slope = 0.0;
};

/// Finite-horizon evaluation of the switch-count criterion along sig, which
/// must lie in the dwell/flee class for (tau, eta) (Error("ClassViolation")).
/// Certified at the horizon iff E(horizon) < 0 and the trend slope < 0.
[[nodiscard]] SwitchCountResult certify_switch_count(const SwitchCountConstants& c, Partition part,
                                                     const SwitchingSignal& sig, double tau,
                                                     double eta, int horizon);
[[nodiscard]] SwitchCountResult certify_switch_count(const Ensemble& ens, const Digraph& g,
                                                     Partition part, double tau, double eta,
                                                     const SwitchingSignal& sig, int horizon);

/// Geometric rescaling of eigenvector bases along a topological order of the
/// unstable subgraph, shrinking every unstable-source switch factor to at
/// most zeta. Exponents: 0 for vertices without unstable-source in-edges,
/// consecutive integers along the order for the remaining unstable vertices,
/// one common top exponent for stable vertices entered from the unstable
/// part. Q_i = base^{exponent_i} * P_i with base = rho/zeta where rho is the
/// largest unstable-source switch factor (base = 1 when rho <= zeta already).
struct RescaledEnsemble {
  std::vector<Eigen::MatrixXcd> Q;  // Q[i] belongs to vertex i+1
  std::vector<int> exponents;
  double base = 1.0;
  std::optional<double> rho_prime;    // max unstable-source factor after rescaling
  std::optional<double> alpha_prime;  // max stable-source factor after rescaling
};

/// Throws Error("CyclicUnstableSubgraph") when the unstable subgraph has a
/// directed cycle; requires 0 < zeta < 1.
[[nodiscard]] RescaledEnsemble rescale_eigenvectors(const Ensemble& ens, const Digraph& g,
                                                    Partition part, double zeta);

/// After rescaling: tau must exceed every stable-source edge's
/// ln||Q_j^{-1} Q_i|| / lambda_i and eta must stay below every
/// unstable-source edge's -ln||Q_j^{-1} Q_i|| / mu_i. Both thresholds are
/// reported; a side with no edges is unconstrained.
[[nodiscard]] StabilityCertificate certify_acyclic_rescaled(const Ensemble& ens, const Digraph& g,
                                                            Partition part, double tau, double eta,
                                                            double zeta);

/// Pairwise-commuting ensembles. On a two-vertex ring the exact per-axis
/// test applies: with a common eigenbasis and per-axis rates alpha_i (first
/// mode) and beta_i (second mode), Certified iff
/// max_i Re(alpha_i) tau + Re(beta_i) eta < 0. On any other graph the
/// loopwise conditions are re-evaluated with unit switch factors (costs
/// vanish in a common basis). Throws Error("NotCommuting") when the
/// commutator test fails.
[[nodiscard]] StabilityCertificate certify_commuting(const Ensemble& ens, const Digraph& g,
                                                     std::optional<Partition> part, double tau,
                                                     double eta,
                                                     const SpectralTolerances& tol = {});

}  // namespace swstab
