#include "swstab/simulate.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "swstab/errors.hpp"

namespace swstab {

namespace {

/// Exponential rate bounding ||e^{At}|| growth from this mode: the largest
/// eigenvalue real part, signed. Equals -decay_rate for stable and
/// +growth_rate for unstable subsystems; for defective ones the replacement
/// basis is trusted as a diagonalization, so the same spectral rate applies.
double source_rate(const SubsystemSpectrum& s) {
  switch (s.classification) {
    case StabilityClass::Stable:
      return -s.decay_rate;
    case StabilityClass::Unstable:
      return s.growth_rate;
    case StabilityClass::Defective:
      return s.max_real_part;
  }
  return s.max_real_part;
}

void require_modes_known(const Ensemble& ens, const SwitchingSignal& sig) {
  for (int mode : sig.modes) {
    if (mode < 1 || mode > ens.size()) {
      throw_input("InvalidSignal",
                  "mode " + std::to_string(mode) + " has no subsystem (ensemble size " +
                      std::to_string(ens.size()) + ")");
    }
  }
}

}  // namespace

Trajectory simulate(const Ensemble& ens, const SwitchingSignal& sig, const Eigen::VectorXd& x0,
                    int samples_per_interval) {
  validate_signal(sig);
  require_modes_known(ens, sig);
  if (x0.size() != ens.dimension()) {
    throw_input("DimensionMismatch", "start state has dimension " + std::to_string(x0.size()) +
                                         ", subsystems have " + std::to_string(ens.dimension()));
  }
  if (samples_per_interval < 1) {
    throw_input("InvalidSampleCount", "samples_per_interval must be at least 1");
  }

  Trajectory traj;
  traj.switch_times = sig.switch_times();
  traj.switch_log_norms.reserve(traj.switch_times.size());

  // Normalized state plus a log-magnitude accumulator: products of hundreds
  // of contracting propagators stay representable where the plain state
  // would flush to zero.
  const double n0 = x0.norm();
  Eigen::VectorXd z;
  double log_accum;
  if (n0 > 0.0) {
    z = x0 / n0;
    log_accum = std::log(n0);
  } else {
    z = Eigen::VectorXd::Zero(x0.size());
    log_accum = -std::numeric_limits<double>::infinity();
  }
  traj.switch_log_norms.push_back(log_accum);

  const size_t intervals = sig.modes.size();
  traj.times.reserve(intervals * static_cast<size_t>(samples_per_interval) + 1);
  for (size_t n = 0; n < intervals; ++n) {
    const int mode = sig.modes[n];
    const double d = sig.durations[n];
    const Eigen::MatrixXd& A = ens.at(mode).A;
    const double t_start = traj.switch_times[n];
    const double magnitude = std::exp(log_accum);

    // Intra-interval samples are trace output only; the switch-time state is
    // recomputed with a single full-interval propagator below.
    const Eigen::MatrixXd step =
        matrix_exponential(A, d / static_cast<double>(samples_per_interval));
    Eigen::VectorXd zs = z;
    for (int j = 0; j < samples_per_interval; ++j) {
      traj.times.push_back(t_start + d * static_cast<double>(j) /
                                         static_cast<double>(samples_per_interval));
      traj.states.push_back(magnitude * zs);
      traj.norms.push_back(magnitude * zs.norm());
      traj.sample_modes.push_back(mode);
      if (j + 1 < samples_per_interval) zs = step * zs;
    }

    const Eigen::VectorXd z_end = matrix_exponential(A, d) * z;
    const double nz = z_end.norm();
    if (nz > 0.0) {
      log_accum += std::log(nz);
      z = z_end / nz;
    } else {
      log_accum = -std::numeric_limits<double>::infinity();
      z.setZero();
    }
    traj.switch_log_norms.push_back(log_accum);
  }

  traj.times.push_back(traj.switch_times.back());
  traj.states.push_back(std::exp(log_accum) * z);
  traj.norms.push_back(std::exp(log_accum) * z.norm());
  traj.sample_modes.push_back(sig.modes.back());
  return traj;
}

EnvelopeSeries envelope(const Ensemble& ens, const Digraph& g, const SwitchingSignal& sig) {
  validate_signal(sig);
  if (g.vertex_count() != ens.size()) {
    throw_input("DimensionMismatch", "graph vertex count must equal ensemble size");
  }
  const AdmissibilityResult adm = check_admissible(sig, g);
  if (!adm.admissible) {
    throw_input("InadmissibleSignal", "mode pair at position " +
                                          std::to_string(adm.first_violation) +
                                          " does not follow a graph edge");
  }

  EnvelopeSeries env;
  env.rho = rho_graph(ens, g);
  env.decomposition = standard_decomposition(sig, g);

  // Per-edge envelope terms: edge n = (modes[n-1], modes[n]) contributes the
  // switch cost plus the rate-weighted time spent in its source mode.
  const size_t edge_count = sig.modes.size() - 1;
  std::vector<double> edge_cost(edge_count);
  std::vector<double> edge_rate_time(edge_count);
  env.log_a.reserve(sig.modes.size());
  env.log_a.push_back(0.0);
  for (size_t n = 0; n < edge_count; ++n) {
    const int from = sig.modes[n];
    const int to = sig.modes[n + 1];
    edge_cost[n] = transition_cost(ens, from, to);
    edge_rate_time[n] = source_rate(ens.at(from)) * sig.durations[n];
    env.log_a.push_back(env.log_a.back() + edge_cost[n] + edge_rate_time[n]);
  }

  // Decomposition-aligned split of log_a.back(): summing the same per-edge
  // terms grouped by instance keeps the identity exact in floating point.
  env.loop_terms.reserve(env.decomposition.instances.size());
  for (size_t i = 0; i < env.decomposition.instances.size(); ++i) {
    const LoopInstance& inst = env.decomposition.instances[i];
    LoopTerm term;
    term.instance_index = static_cast<int>(i) + 1;
    double lambda_min = std::numeric_limits<double>::infinity();
    bool all_stable = true;
    for (int n : inst.edge_indices) {
      const size_t idx = static_cast<size_t>(n - 1);
      term.cost_sum += edge_cost[idx];
      term.rate_time_sum += edge_rate_time[idx];
      term.exact_term += edge_cost[idx] + edge_rate_time[idx];
      const auto& source = ens.at(sig.modes[idx]);
      if (source.classification == StabilityClass::Stable) {
        lambda_min = std::min(lambda_min, source.decay_rate);
      } else {
        all_stable = false;
      }
    }
    if (all_stable && !inst.edge_indices.empty()) {
      term.bound_term = term.cost_sum - lambda_min * inst.total_time;
    }
    env.loop_terms.push_back(std::move(term));
  }
  for (int n : env.decomposition.residual_edge_indices) {
    const size_t idx = static_cast<size_t>(n - 1);
    env.residual_log_cost += edge_cost[idx] + edge_rate_time[idx];
  }
  return env;
}

EnvelopeCheck envelope_check(const Ensemble& ens, const Digraph& g, const SwitchingSignal& sig,
                             const Eigen::VectorXd& x0) {
  if (!(x0.norm() > 0.0)) {
    throw_input("InvalidState", "envelope comparison needs a nonzero start state");
  }
  const EnvelopeSeries env = envelope(ens, g, sig);
  const Trajectory traj = simulate(ens, sig, x0, 1);

  EnvelopeCheck check;
  check.max_log_excess = -std::numeric_limits<double>::infinity();
  const double log_rho = std::log(env.rho);
  const double log_x0 = std::log(x0.norm());
  const double slack = std::log1p(1e-8);
  for (size_t m = 0; m < env.log_a.size(); ++m) {
    const double excess = traj.switch_log_norms[m] - (log_rho + env.log_a[m] + log_x0);
    check.max_log_excess = std::max(check.max_log_excess, excess);
    if (excess > slack && check.ok) {
      check.ok = false;
      check.first_violation = static_cast<int>(m);
    }
  }
  return check;
}

double least_squares_slope(const std::vector<double>& t, const std::vector<double>& y,
                           std::size_t from) {
  if (t.size() != y.size() || from >= t.size()) {
    throw_input("InvalidSeries", "slope needs matching series with data past the start index");
  }
  double mean_t = 0.0, mean_y = 0.0;
  const double count = static_cast<double>(t.size() - from);
  for (size_t m = from; m < t.size(); ++m) {
    mean_t += t[m];
    mean_y += y[m];
  }
  mean_t /= count;
  mean_y /= count;
  double cov = 0.0, var = 0.0;
  for (size_t m = from; m < t.size(); ++m) {
    cov += (t[m] - mean_t) * (y[m] - mean_y);
    var += (t[m] - mean_t) * (t[m] - mean_t);
  }
  return var > 0.0 ? cov / var : 0.0;
}

ValidationReport validate_certificate(const Ensemble& ens, const Digraph& g,
                                      const StabilityCertificate& cert,
                                      const SignalClassSpec& spec, std::optional<Partition> part,
                                      int trials, int horizon, std::uint64_t seed) {
  if (cert.verdict != Verdict::Certified) {
    throw_input("NotCertified", "only a Certified verdict can be validated");
  }
  if (trials < 1) throw_input("InvalidTrialCount", "need at least one trial");
  if (horizon < 2) throw_input("InvalidHorizon", "need at least two switching intervals");

  ValidationReport report;
  report.trials = trials;
  report.max_slope = -std::numeric_limits<double>::infinity();
  report.max_terminal_log_ratio = -std::numeric_limits<double>::infinity();
  report.slopes.reserve(static_cast<size_t>(trials));

  std::mt19937_64 master(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  bool all_pass = true;
  for (int trial = 0; trial < trials; ++trial) {
    const std::uint64_t synth_seed = master();
    const std::uint64_t state_seed = master();
    const SwitchingSignal sig = synthesize_signal(g, spec, horizon, synth_seed, part);

    std::mt19937_64 xrng(state_seed);
    Eigen::VectorXd x0(ens.dimension());
    double norm = 0.0;
    do {
      for (int i = 0; i < x0.size(); ++i) x0(i) = gauss(xrng);
      norm = x0.norm();
    } while (!(norm > 1e-12));
    x0 /= norm;

    const Trajectory traj = simulate(ens, sig, x0, 1);
    const double slope = least_squares_slope(traj.switch_times, traj.switch_log_norms,
                                             traj.switch_times.size() / 2);
    const double terminal = traj.switch_log_norms.back() - traj.switch_log_norms.front();
    report.slopes.push_back(slope);
    report.max_slope = std::max(report.max_slope, slope);
    report.max_terminal_log_ratio = std::max(report.max_terminal_log_ratio, terminal);
    all_pass = all_pass && slope < 1e-6 && terminal < 0.0;
  }
  report.pass = all_pass;
  return report;
}

}  // namespace swstab
