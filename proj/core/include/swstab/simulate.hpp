#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "swstab/certify.hpp"
#include "swstab/digraph.hpp"
#include "swstab/signal.hpp"
#include "swstab/spectral.hpp"

namespace swstab {

/// Piecewise-exact solution of x' = A_mode x along a signal. States at
/// switch times come from propagator products; intra-interval samples are
/// for trace output only. switch_log_norms holds ln||x(t_m)||, m = 0..N,
/// accumulated in log space so long decaying runs do not underflow (sampled
/// states may flush to zero; the log norms stay exact).
struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<double> norms;
  std::vector<int> sample_modes;

  std::vector<double> switch_times;      // t_0..t_N
  std::vector<double> switch_log_norms;  // ln||x(t_m)||
};

/// Throws Error("DimensionMismatch") when x0 does not match the ensemble
/// dimension and Error("InvalidSignal") when a mode index has no subsystem.
/// Admissibility against a graph is the caller's concern.
[[nodiscard]] Trajectory simulate(const Ensemble& ens, const SwitchingSignal& sig,
                                  const Eigen::VectorXd& x0, int samples_per_interval = 20);

/// One extracted loop instance's contribution to ln a_N, split into the cost
/// sum and the per-edge rate-weighted time. exact_term = cost_sum +
/// rate_time_sum reproduces ln a_N exactly; bound_term replaces the rate sum
/// with -lambda_min * total_time (the certification bound, all-stable loops).
struct LoopTerm {
  int instance_index = 0;
  double cost_sum = 0.0;
  double rate_time_sum = 0.0;
  double exact_term = 0.0;
  std::optional<double> bound_term;
};

/// Switch-time envelope a_n = prod_{j<n} ||P_{s_{j+1}}^{-1} P_{s_j}|| e^{r_j d_j}
/// with r_j = -decay (stable source) or +growth (unstable source), in log
/// space: log_a[m] = ln a_{m+1}, so log_a[0] = 0 and
/// ||x(t_m)|| <= rho * exp(log_a[m]) * ||x0|| at the start of interval m+1.
/// The decomposition-aligned split satisfies
/// log_a.back() = residual_log_cost + sum of exact loop terms to machine
/// precision.
struct EnvelopeSeries {
  std::vector<double> log_a;
  double rho = 1.0;
  StandardDecomposition decomposition;
  double residual_log_cost = 0.0;
  std::vector<LoopTerm> loop_terms;
};

/// Throws Error("DefectiveEndpoint") when a graph vertex lacks a usable basis
/// (the envelope constant ranges over the whole graph) and
/// Error("InadmissibleSignal") when sig does not follow g.
[[nodiscard]] EnvelopeSeries envelope(const Ensemble& ens, const Digraph& g,
                                      const SwitchingSignal& sig);

struct EnvelopeCheck {
  bool ok = true;
  int first_violation = -1;  // switch index m, -1 when none
  /// Largest ln(||x(t_m)||) - ln(rho a_{m+1} ||x0||) over all switches.
  double max_log_excess = 0.0;
};

/// Verifies ||x(t_m)|| <= rho * a_{m+1} * ||x0|| * (1 + 1e-8) at the start
/// of every interval, in log space.
[[nodiscard]] EnvelopeCheck envelope_check(const Ensemble& ens, const Digraph& g,
                                           const SwitchingSignal& sig, const Eigen::VectorXd& x0);

/// Least-squares slope of y against t over indices [from, ...]. Helper for
/// decay diagnostics; exposed for reuse by tools and tests.
[[nodiscard]] double least_squares_slope(const std::vector<double>& t,
                                         const std::vector<double>& y, std::size_t from);

struct ValidationReport {
  bool pass = false;
  int trials = 0;
  double max_slope = 0.0;           // worst log-norm slope over the last half
  double max_terminal_log_ratio = 0.0;  // worst ln(||x(end)|| / ||x0||)
  std::vector<double> slopes;
};

/// Monte Carlo soundness check of a Certified verdict: synthesize `trials`
/// class members of `horizon` switches, simulate each from a random unit
/// start, and require every trajectory's terminal slope negative (1e-6
/// slack) with final norm below the start. Requires cert.verdict Certified
/// (Error("NotCertified") otherwise); synthesis failures propagate.
[[nodiscard]] ValidationReport validate_certificate(const Ensemble& ens, const Digraph& g,
                                                    const StabilityCertificate& cert,
                                                    const SignalClassSpec& spec,
                                                    std::optional<Partition> part, int trials,
                                                    int horizon, std::uint64_t seed);

}  // namespace swstab
