#include "swstab/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "swstab/errors.hpp"

namespace swstab {

namespace {

std::string loop_label(const SimpleLoop& loop) {
  std::ostringstream out;
  out << "(";
  for (size_t i = 0; i < loop.vertices.size(); ++i) {
    if (i) out << ",";
    out << loop.vertices[i];
  }
  out << ")";
  return out.str();
}

/// Decay rate usable by loop thresholds: native for stable subsystems, and
/// for defective ones with a replacement basis the sign of the spectrum still
/// decides. Returns nullopt when the subsystem cannot serve as a stable
/// source.
std::optional<double> effective_decay(const SubsystemSpectrum& s) {
  if (s.classification == StabilityClass::Stable) return s.decay_rate;
  if (s.classification == StabilityClass::Defective && s.override_P && s.max_real_part < 0.0) {
    return -s.max_real_part;
  }
  return std::nullopt;
}

std::optional<double> effective_growth(const SubsystemSpectrum& s) {
  if (s.classification == StabilityClass::Unstable) return s.growth_rate;
  if (s.classification == StabilityClass::Defective && s.override_P && s.max_real_part > 0.0) {
    return s.max_real_part;
  }
  return std::nullopt;
}

Inequality make_inequality(std::string label, double value, double threshold) {
  Inequality q;
  q.label = std::move(label);
  q.value = value;
  q.threshold = threshold;
  q.margin = threshold - value;
  q.holds = value < threshold;
  return q;
}

/// Fold the inequalities into the verdict: every strict inequality must hold.
void finalize(StabilityCertificate& cert) {
  bool all = !cert.inequalities.empty();
  double margin = std::numeric_limits<double>::infinity();
  for (const Inequality& q : cert.inequalities) {
    all = all && q.holds;
    margin = std::min(margin, q.margin);
  }
  cert.verdict = all ? Verdict::Certified : Verdict::NotCertified;
  cert.margin = cert.inequalities.empty() ? 0.0 : margin;
}

void require_sizes_match(const Ensemble& ens, const Digraph& g) {
  if (g.vertex_count() != ens.size()) {
    throw_input("DimensionMismatch", "graph vertex count must equal ensemble size");
  }
}

Partition require_matching_partition(const Ensemble& ens, Partition part) {
  const auto derived = ens.derived_partition();
  if (!derived) {
    throw_input("PartitionRequired",
                "subsystems must be ordered stable-first with no defective entries; "
                "reorder modes or supply replacement bases");
  }
  if (derived->stable_count != part.stable_count) {
    throw_input("PartitionMismatch",
                "supplied stable count " + std::to_string(part.stable_count) +
                    " does not match the eigenvalue classification (stable count " +
                    std::to_string(derived->stable_count) + ")");
  }
  return part;
}

std::string partition_assumption(Partition part, int k) {
  std::ostringstream out;
  out << "stable modes 1.." << part.stable_count << ", unstable modes " << (part.stable_count + 1)
      << ".." << k << " (classification checked)";
  return out.str();
}

/// True when the edge set is a single directed cycle covering every vertex.
bool is_unidirectional_ring(const Digraph& g) {
  const int k = g.vertex_count();
  if (k < 2 || static_cast<int>(g.edges().size()) != k) return false;
  for (int v = 1; v <= k; ++v) {
    if (g.out_degree(v) != 1 || g.in_degree(v) != 1) return false;
  }
  // One cycle through all vertices: following successors from 1 returns to 1
  // after exactly k steps.
  int v = 1;
  for (int step = 0; step < k; ++step) v = g.successors(v).front();
  if (v != 1) return false;
  std::set<int> seen;
  v = 1;
  for (int step = 0; step < k; ++step) {
    seen.insert(v);
    v = g.successors(v).front();
  }
  return static_cast<int>(seen.size()) == k;
}

}  // namespace

double nu_walk(const Ensemble& ens, const std::vector<int>& walk) {
  if (walk.empty()) {
    throw_input("NotALoop", "closed walk needs at least one vertex");
  }
  double cost_sum = 0.0;
  double lambda_min = std::numeric_limits<double>::infinity();
  for (size_t m = 0; m < walk.size(); ++m) {
    const int from = walk[m];
    const int to = walk[(m + 1) % walk.size()];
    const auto decay = effective_decay(ens.at(from));
    if (!decay) {
      if (ens.at(from).classification == StabilityClass::Unstable) {
        throw_numerical("UnstableSource", "loop vertex " + std::to_string(from) +
                                              " is unstable; the dwell threshold needs stable "
                                              "sources");
      }
      throw_numerical("DefectiveEndpoint",
                      "loop vertex " + std::to_string(from) +
                          " is defective and has no replacement eigenvector basis");
    }
    cost_sum += transition_cost(ens, from, to);
    lambda_min = std::min(lambda_min, *decay);
  }
  return cost_sum / lambda_min;
}

double nu_loop(const Ensemble& ens, const SimpleLoop& loop) { return nu_walk(ens, loop.vertices); }

BoundsReport classical_bounds(const Ensemble& ens, const Digraph& g) {
  require_sizes_match(ens, g);
  BoundsReport report;
  std::set<int> flagged;

  const auto note_vertex = [&](int v) {
    if (!ens.at(v).has_usable_eigenvectors() && flagged.insert(v).second) {
      report.warnings.push_back("subsystem " + std::to_string(v) +
                                " is defective without a replacement basis; quantities touching "
                                "it are unavailable");
    }
  };
  for (int v = 1; v <= g.vertex_count(); ++v) note_vertex(v);

  // Per-edge costs and the edge-maximum dwell bound.
  bool mu_G_complete = true;
  double mu_G = 0.0;
  bool any_edge = false;
  for (const Edge& e : g.edges()) {
    EdgeCost ec;
    ec.edge = e;
    const bool usable =
        ens.at(e.from).has_usable_eigenvectors() && ens.at(e.to).has_usable_eigenvectors();
    if (!usable) {
      ec.available = false;
      report.edge_costs.push_back(ec);
      mu_G_complete = false;
      continue;
    }
    ec.cost = transition_cost(ens, e.from, e.to);
    report.edge_costs.push_back(ec);
    const auto decay = effective_decay(ens.at(e.from));
    if (!decay) {
      mu_G_complete = false;
      continue;
    }
    mu_G = any_edge ? std::max(mu_G, ec.cost / *decay) : ec.cost / *decay;
    any_edge = true;
  }
  if (mu_G_complete && any_edge) {
    report.mu_G = mu_G;
  } else if (!mu_G_complete) {
    report.warnings.push_back(
        "edge-maximum dwell bound unavailable: some edge lacks a usable basis or stable source");
  }

  // Per-loop thresholds and the cycle-ratio maxima.
  const auto loops = enumerate_simple_loops(g);
  bool rho_star_complete = true;
  for (const SimpleLoop& loop : loops) {
    LoopBound lb;
    lb.loop = loop;
    bool usable = true;
    bool all_stable_sources = true;
    double lambda_min = std::numeric_limits<double>::infinity();
    for (size_t m = 0; m < loop.vertices.size() && usable; ++m) {
      const int from = loop.vertices[m];
      const int to = loop.vertices[(m + 1) % loop.vertices.size()];
      if (!ens.at(from).has_usable_eigenvectors() || !ens.at(to).has_usable_eigenvectors()) {
        usable = false;
        lb.unavailable_reason = "defective endpoint without replacement basis";
        break;
      }
      lb.cost_sum += transition_cost(ens, from, to);
      const auto decay = effective_decay(ens.at(from));
      const auto growth = effective_growth(ens.at(from));
      if (decay) {
        lb.lambda_sum += *decay;
        lambda_min = std::min(lambda_min, *decay);
      } else {
        all_stable_sources = false;
      }
      if (growth) {
        lb.mu_sum += *growth;
        lb.mu_max = std::max(lb.mu_max, *growth);
      }
    }
    if (!usable) {
      lb.available = false;
      lb.cost_sum = lb.lambda_sum = lb.mu_sum = lb.mu_max = 0.0;
      rho_star_complete = false;
      report.loops.push_back(std::move(lb));
      continue;
    }
    if (all_stable_sources) {
      lb.lambda_min = lambda_min;
      lb.nu = lb.cost_sum / lambda_min;
      lb.cycle_ratio = lb.cost_sum / lb.lambda_sum;
      if (!report.rho_star || *lb.cycle_ratio > *report.rho_star) {
        report.rho_star = lb.cycle_ratio;
      }
    } else {
      lb.lambda_min = std::isfinite(lambda_min) ? lambda_min : 0.0;
      rho_star_complete = false;
    }
    report.loops.push_back(std::move(lb));
  }
  if (report.rho_star && !rho_star_complete) {
    report.rho_star_partial = true;
    report.warnings.push_back(
        "maximum cycle ratio is a partial maximum: some loops were skipped (defective endpoint "
        "or unstable source)");
  }

  // Pairwise symmetric edge ratio over edges whose endpoints both certify.
  bool rho2_complete = true;
  for (const Edge& e : g.edges()) {
    const auto da = effective_decay(ens.at(e.from));
    const auto db = effective_decay(ens.at(e.to));
    if (!da || !db || !ens.at(e.from).has_usable_eigenvectors() ||
        !ens.at(e.to).has_usable_eigenvectors()) {
      rho2_complete = false;
      continue;
    }
    const double value =
        (transition_cost(ens, e.from, e.to) + transition_cost(ens, e.to, e.from)) / (*da + *db);
    if (!report.rho2_star || value > *report.rho2_star) report.rho2_star = value;
  }
  if (report.rho2_star && !rho2_complete) {
    report.rho2_star_partial = true;
    report.warnings.push_back(
        "pairwise edge ratio is a partial maximum: some edges were skipped (defective endpoint "
        "or unstable source)");
  }

  // Graph constants for the mixed-case certificates.
  if (flagged.empty()) {
    report.rho = rho_graph(ens, g);
    if (const auto part = ens.derived_partition()) {
      double rho1 = 0.0, rho2 = 0.0;
      bool any1 = false, any2 = false;
      for (const Edge& e : g.edges()) {
        const double factor = transition_cost_factor(ens, e.from, e.to);
        if (e.from <= part->stable_count) {
          rho1 = any1 ? std::max(rho1, factor) : factor;
          any1 = true;
        } else {
          rho2 = any2 ? std::max(rho2, factor) : factor;
          any2 = true;
        }
      }
      if (any1) report.rho1 = rho1;
      if (any2) report.rho2 = rho2;
    }
  } else {
    report.warnings.push_back(
        "envelope constant unavailable: defective subsystem without replacement basis");
  }

  return report;
}

StabilityCertificate certify_simple_loop_dwell(const Ensemble& ens, const Digraph& g,
                                               const std::vector<double>& tau) {
  require_sizes_match(ens, g);
  StabilityCertificate cert;
  cert.criterion = "simple-loop-dwell";

  const auto loops = enumerate_simple_loops(g);
  if (loops.empty()) {
    throw_input("HypothesisViolation", "graph has no simple loop, persistent switching needs one");
  }
  if (tau.size() != loops.size()) {
    throw_input("InvalidClassSpec", "need one tau per simple loop: graph has " +
                                        std::to_string(loops.size()) + ", got " +
                                        std::to_string(tau.size()));
  }
  for (double t : tau) {
    if (!(t > 0.0)) throw_input("InvalidClassSpec", "tau must be strictly positive");
  }
  for (int v = 1; v <= ens.size(); ++v) {
    if (!effective_decay(ens.at(v))) {
      throw_input("HypothesisViolation",
                  "subsystem " + std::to_string(v) +
                      " is not stable (or is defective without a replacement basis); this "
                      "criterion needs an all-stable ensemble");
    }
    if (ens.at(v).classification == StabilityClass::Defective) {
      cert.warnings.push_back("subsystem " + std::to_string(v) +
                              " is defective; its replacement basis is trusted as a "
                              "diagonalization");
    }
  }
  cert.assumptions.push_back("graph has a simple loop (checked)");
  cert.assumptions.push_back("all subsystems stable (checked)");

  for (size_t i = 0; i < loops.size(); ++i) {
    const double nu = nu_loop(ens, loops[i]);
    cert.inequalities.push_back(
        make_inequality("loop " + loop_label(loops[i]) + ": nu < tau", nu, tau[i]));
  }
  finalize(cert);
  return cert;
}

StabilityCertificate certify_loop_aggregate(const Ensemble& ens, const Digraph& g,
                                            const std::vector<PromisedLoop>& loops) {
  require_sizes_match(ens, g);
  if (loops.empty()) {
    throw_input("NotALoop", "no loops supplied");
  }
  StabilityCertificate cert;
  cert.criterion = "loop-aggregate";
  cert.assumptions.push_back("only the supplied closed walks are certified");

  for (size_t i = 0; i < loops.size(); ++i) {
    const auto& walk = loops[i].walk;
    if (walk.empty()) throw_input("NotALoop", "closed walk needs at least one vertex");
    for (size_t m = 0; m < walk.size(); ++m) {
      const int from = walk[m];
      const int to = walk[(m + 1) % walk.size()];
      if (from < 1 || from > g.vertex_count() || !g.has_edge(from, to)) {
        std::ostringstream msg;
        msg << "walk " << (i + 1) << ": (" << from << ", " << to << ") is not a graph edge";
        throw_input("NotALoop", msg.str());
      }
    }
    const double nu = nu_walk(ens, walk);
    std::ostringstream label;
    label << "walk " << (i + 1) << ": nu < promised time";
    cert.inequalities.push_back(make_inequality(label.str(), nu, loops[i].promised_time));
  }
  finalize(cert);
  return cert;
}

namespace {

/// Shared scaffolding of the two ring criteria: validates the ring shape and
/// partition, accumulates the edge-cost sum and the per-class rate data.
struct RingData {
  double log_rho = 0.0;
  double lambda_sum = 0.0;
  double mu_sum = 0.0;
  double lambda_min = std::numeric_limits<double>::infinity();
  double mu_max = 0.0;
};

RingData ring_data(const Ensemble& ens, const Digraph& g, Partition part) {
  require_sizes_match(ens, g);
  if (!is_unidirectional_ring(g)) {
    throw_input("NotARing", "this criterion needs a single directed cycle through every vertex");
  }
  require_matching_partition(ens, part);
  RingData data;
  for (const Edge& e : g.edges()) {
    data.log_rho += transition_cost(ens, e.from, e.to);
  }
  for (int v = 1; v <= ens.size(); ++v) {
    if (v <= part.stable_count) {
      data.lambda_sum += ens.at(v).decay_rate;
      data.lambda_min = std::min(data.lambda_min, ens.at(v).decay_rate);
    } else {
      data.mu_sum += ens.at(v).growth_rate;
      data.mu_max = std::max(data.mu_max, ens.at(v).growth_rate);
    }
  }
  return data;
}

void require_positive_pair(double tau, double eta) {
  if (!(tau > 0.0) || !(eta > 0.0)) {
    throw_input("InvalidClassSpec", "tau and eta must be strictly positive");
  }
}

}  // namespace

RingConstants ring_constants(const Ensemble& ens, const Digraph& g, Partition part) {
  const RingData data = ring_data(ens, g, part);
  return RingConstants{data.log_rho, data.lambda_sum, data.mu_sum};
}

StabilityCertificate certify_ring_uniform(const RingConstants& c, double tau, double eta) {
  require_positive_pair(tau, eta);
  StabilityCertificate cert;
  cert.criterion = "ring-uniform";
  cert.assumptions.push_back("graph is a unidirectional ring");
  std::ostringstream label;
  label << "ln rho - (sum lambda) tau + (sum mu) eta < 0: " << c.log_rho << " - " << c.lambda_sum
        << " tau + " << c.mu_sum << " eta";
  cert.inequalities.push_back(
      make_inequality(label.str(), c.log_rho - c.lambda_sum * tau + c.mu_sum * eta, 0.0));
  finalize(cert);
  return cert;
}

StabilityCertificate certify_ring_uniform(const Ensemble& ens, const Digraph& g, Partition part,
                                          double tau, double eta) {
  StabilityCertificate cert = certify_ring_uniform(ring_constants(ens, g, part), tau, eta);
  cert.assumptions.push_back(partition_assumption(part, ens.size()));
  return cert;
}

RingLoopwiseConstants ring_loopwise_constants(const Ensemble& ens, const Digraph& g,
                                              Partition part) {
  const RingData data = ring_data(ens, g, part);
  return RingLoopwiseConstants{data.log_rho, data.lambda_min, data.mu_max};
}

StabilityCertificate certify_ring_loopwise(const RingLoopwiseConstants& c, double tau1,
                                           double eta1) {
  require_positive_pair(tau1, eta1);
  StabilityCertificate cert;
  cert.criterion = "ring-loopwise";
  cert.assumptions.push_back("graph is a unidirectional ring");
  cert.assumptions.push_back("tau_1/eta_1 bound the per-traversal stable/unstable time");
  std::ostringstream label;
  label << "ln rho - lambda tau_1 + mu eta_1 < 0: " << c.log_rho << " - " << c.lambda_min
        << " tau_1 + " << c.mu_max << " eta_1";
  cert.inequalities.push_back(
      make_inequality(label.str(), c.log_rho - c.lambda_min * tau1 + c.mu_max * eta1, 0.0));
  finalize(cert);
  return cert;
}

StabilityCertificate certify_ring_loopwise(const Ensemble& ens, const Digraph& g, Partition part,
                                           double tau1, double eta1) {
  StabilityCertificate cert = certify_ring_loopwise(ring_loopwise_constants(ens, g, part), tau1,
                                                    eta1);
  cert.assumptions.push_back(partition_assumption(part, ens.size()));
  return cert;
}

StabilityCertificate certify_bipartite(const Ensemble& ens, const Digraph& g, Partition part,
                                       double tau, double eta) {
  require_sizes_match(ens, g);
  require_matching_partition(ens, part);
  require_positive_pair(tau, eta);
  const int r = part.stable_count;
  for (const Edge& e : g.edges()) {
    const bool from_stable = e.from <= r;
    const bool to_stable = e.to <= r;
    if (from_stable == to_stable) {
      std::ostringstream msg;
      msg << "edge (" << e.from << ", " << e.to << ") stays inside one class; the graph must be "
          << "bipartite between stable and unstable modes";
      throw_input("NotBipartite", msg.str());
    }
  }

  double log_rho1 = 0.0, log_rho2 = 0.0;
  bool any1 = false, any2 = false;
  double lambda = std::numeric_limits<double>::infinity();
  double mu = 0.0;
  for (const Edge& e : g.edges()) {
    const double cost = transition_cost(ens, e.from, e.to);
    if (e.from <= r) {
      log_rho1 = any1 ? std::max(log_rho1, cost) : cost;
      any1 = true;
    } else {
      log_rho2 = any2 ? std::max(log_rho2, cost) : cost;
      any2 = true;
    }
  }
  for (int v = 1; v <= ens.size(); ++v) {
    if (v <= r) {
      lambda = std::min(lambda, ens.at(v).decay_rate);
    } else {
      mu = std::max(mu, ens.at(v).growth_rate);
    }
  }

  StabilityCertificate cert;
  cert.criterion = "bipartite";
  cert.assumptions.push_back("every edge joins a stable and an unstable mode (checked)");
  cert.assumptions.push_back(partition_assumption(part, ens.size()));
  std::ostringstream label;
  label << "ln rho_1 + ln rho_2 - lambda tau + mu eta < 0: " << log_rho1 << " + " << log_rho2
        << " - " << lambda << " tau + " << mu << " eta";
  cert.inequalities.push_back(
      make_inequality(label.str(), log_rho1 + log_rho2 - lambda * tau + mu * eta, 0.0));
  finalize(cert);
  return cert;
}

namespace {

struct LoopRates {
  double cost_sum = 0.0;
  double lambda_sum = 0.0;
  double mu_sum = 0.0;
  double lambda_min = std::numeric_limits<double>::infinity();
  double mu_max = 0.0;
  bool has_stable_edge = false;
  bool has_unstable_edge = false;
};

LoopRates loop_rates(const Ensemble& ens, const SimpleLoop& loop, Partition part) {
  LoopRates rates;
  for (size_t m = 0; m < loop.vertices.size(); ++m) {
    const int from = loop.vertices[m];
    const int to = loop.vertices[(m + 1) % loop.vertices.size()];
    rates.cost_sum += transition_cost(ens, from, to);
    if (from <= part.stable_count) {
      rates.lambda_sum += ens.at(from).decay_rate;
      rates.lambda_min = std::min(rates.lambda_min, ens.at(from).decay_rate);
      rates.has_stable_edge = true;
    } else {
      rates.mu_sum += ens.at(from).growth_rate;
      rates.mu_max = std::max(rates.mu_max, ens.at(from).growth_rate);
      rates.has_unstable_edge = true;
    }
  }
  return rates;
}

}  // namespace

StabilityCertificate certify_general_uniform(const Ensemble& ens, const Digraph& g, Partition part,
                                             double tau, double eta) {
  require_sizes_match(ens, g);
  require_matching_partition(ens, part);
  require_positive_pair(tau, eta);
  const auto loops = enumerate_simple_loops(g);
  if (loops.empty()) {
    throw_input("HypothesisViolation", "graph has no simple loop, persistent switching needs one");
  }
  StabilityCertificate cert;
  cert.criterion = "general-uniform";
  cert.assumptions.push_back(partition_assumption(part, ens.size()));
  for (const SimpleLoop& loop : loops) {
    const LoopRates rates = loop_rates(ens, loop, part);
    cert.inequalities.push_back(make_inequality(
        "loop " + loop_label(loop) + ": ln rho_i - lambda_i tau + mu_i eta < 0",
        rates.cost_sum - rates.lambda_sum * tau + rates.mu_sum * eta, 0.0));
  }
  finalize(cert);
  return cert;
}

StabilityCertificate certify_general_loopwise(const Ensemble& ens, const Digraph& g,
                                              Partition part, const std::vector<double>& tau,
                                              const std::vector<double>& eta) {
  require_sizes_match(ens, g);
  require_matching_partition(ens, part);
  const auto loops = enumerate_simple_loops(g);
  if (loops.empty()) {
    throw_input("HypothesisViolation", "graph has no simple loop, persistent switching needs one");
  }
  if (tau.size() != loops.size() || eta.size() != loops.size()) {
    throw_input("InvalidClassSpec",
                "need one (tau, eta) pair per simple loop: graph has " +
                    std::to_string(loops.size()) + ", got " + std::to_string(tau.size()) + "/" +
                    std::to_string(eta.size()));
  }
  for (size_t i = 0; i < loops.size(); ++i) require_positive_pair(tau[i], eta[i]);

  StabilityCertificate cert;
  cert.criterion = "general-loopwise";
  cert.assumptions.push_back(partition_assumption(part, ens.size()));
  cert.assumptions.push_back("tau_i/eta_i bound each instance's stable/unstable time");
  for (size_t i = 0; i < loops.size(); ++i) {
    const LoopRates rates = loop_rates(ens, loops[i], part);
    // A loop with no stable-source edge contributes no decay; its inequality
    // can only hold through a negative cost sum.
    const double lambda = rates.has_stable_edge ? rates.lambda_min : 0.0;
    cert.inequalities.push_back(make_inequality(
        "loop " + loop_label(loops[i]) + ": ln rho_i - lambda_i tau_i + mu_i eta_i < 0",
        rates.cost_sum - lambda * tau[i] + rates.mu_max * eta[i], 0.0));
  }
  finalize(cert);
  return cert;
}

namespace {

SwitchCountResult switch_count_core(const SwitchCountConstants& c, Partition part,
                                    const SwitchingSignal& sig, double tau, double eta,
                                    int horizon, std::vector<std::string> assumptions) {
  require_positive_pair(tau, eta);
  validate_signal(sig);
  if (horizon < 1 || horizon > sig.length()) {
    throw_input("InvalidPrefix", "horizon must lie in [1, signal length]");
  }

  // The signal must respect the dwell floor on stable modes and the flee
  // ceiling on unstable ones; otherwise the counters say nothing.
  for (int n = 0; n < horizon; ++n) {
    const size_t idx = static_cast<size_t>(n);
    const bool stable = sig.modes[idx] <= part.stable_count;
    if (stable && sig.durations[idx] < tau) {
      throw_input("ClassViolation", "duration " + std::to_string(n + 1) +
                                        " undercuts the stable dwell floor tau");
    }
    if (!stable && sig.durations[idx] > eta) {
      throw_input("ClassViolation", "duration " + std::to_string(n + 1) +
                                        " exceeds the unstable flee ceiling eta");
    }
  }

  SwitchCountResult result;
  result.certificate.criterion = "switch-count";
  result.certificate.assumptions = std::move(assumptions);

  const double stable_term = c.log_rho1 - c.lambda * tau;
  const double unstable_term = c.log_rho2 + c.mu * eta;
  result.series.reserve(static_cast<size_t>(horizon));
  int stable_count = 0;
  for (int m = 1; m <= horizon; ++m) {
    if (sig.modes[static_cast<size_t>(m - 1)] <= part.stable_count) ++stable_count;
    const int unstable_count = m - stable_count;
    result.series.push_back(stable_count * stable_term + unstable_count * unstable_term);
  }

  const bool both_visited = stable_count > 0 && stable_count < horizon;
  result.certificate.assumptions.push_back(
      both_visited ? "signal prefix visits both mode classes (checked)"
                   : "signal prefix visits a single mode class; the asymptotic hypothesis is "
                     "unverified at this horizon");

  if (c.lambda * tau - c.log_rho1 > 0.0) {
    result.threshold_ratio = unstable_term / (c.lambda * tau - c.log_rho1);
  }

  std::vector<double> index(result.series.size());
  for (size_t m = 0; m < index.size(); ++m) index[m] = static_cast<double>(m + 1);
  // Least-squares slope over the last half of the horizon.
  const size_t from = index.size() / 2;
  double mean_t = 0.0, mean_y = 0.0;
  for (size_t m = from; m < index.size(); ++m) {
    mean_t += index[m];
    mean_y += result.series[m];
  }
  const double count = static_cast<double>(index.size() - from);
  mean_t /= count;
  mean_y /= count;
  double cov = 0.0, var = 0.0;
  for (size_t m = from; m < index.size(); ++m) {
    cov += (index[m] - mean_t) * (result.series[m] - mean_y);
    var += (index[m] - mean_t) * (index[m] - mean_t);
  }
  result.slope = var > 0.0 ? cov / var : 0.0;

  result.certificate.inequalities.push_back(
      make_inequality("E(horizon) < 0", result.series.back(), 0.0));
  result.certificate.inequalities.push_back(
      make_inequality("trend slope of E over the last half < 0", result.slope, 0.0));
  finalize(result.certificate);
  // A certificate at a finite horizon extrapolates; record that explicitly.
  result.certificate.assumptions.push_back(
      "verdict is at-horizon: the trend over the observed prefix is extrapolated");
  return result;
}

}  // namespace

SwitchCountResult certify_switch_count(const SwitchCountConstants& c, Partition part,
                                       const SwitchingSignal& sig, double tau, double eta,
                                       int horizon) {
  return switch_count_core(c, part, sig, tau, eta, horizon,
                           {"constants supplied by the caller (not recomputed)"});
}

SwitchCountResult certify_switch_count(const Ensemble& ens, const Digraph& g, Partition part,
                                       double tau, double eta, const SwitchingSignal& sig,
                                       int horizon) {
  require_sizes_match(ens, g);
  require_matching_partition(ens, part);
  const AdmissibilityResult adm = check_admissible(sig, g);
  if (!adm.admissible) {
    throw_input("InadmissibleSignal", "mode pair at position " +
                                          std::to_string(adm.first_violation) +
                                          " does not follow a graph edge");
  }

  SwitchCountConstants c;
  bool any1 = false, any2 = false;
  for (const Edge& e : g.edges()) {
    const double cost = transition_cost(ens, e.from, e.to);
    if (e.from <= part.stable_count) {
      c.log_rho1 = any1 ? std::max(c.log_rho1, cost) : cost;
      any1 = true;
    } else {
      c.log_rho2 = any2 ? std::max(c.log_rho2, cost) : cost;
      any2 = true;
    }
  }
  c.lambda = std::numeric_limits<double>::infinity();
  for (int v = 1; v <= ens.size(); ++v) {
    if (v <= part.stable_count) {
      c.lambda = std::min(c.lambda, ens.at(v).decay_rate);
    } else {
      c.mu = std::max(c.mu, ens.at(v).growth_rate);
    }
  }
  return switch_count_core(c, part, sig, tau, eta, horizon,
                           {partition_assumption(part, ens.size())});
}

RescaledEnsemble rescale_eigenvectors(const Ensemble& ens, const Digraph& g, Partition part,
                                      double zeta) {
  require_sizes_match(ens, g);
  require_matching_partition(ens, part);
  if (!(zeta > 0.0) || !(zeta < 1.0)) {
    throw_input("InvalidClassSpec", "zeta must lie strictly between 0 and 1");
  }
  const Digraph gu = unstable_subgraph(g, part);
  std::vector<int> order;
  try {
    order = topological_sort(gu);
  } catch (const Error& e) {
    if (e.code() == "CyclicGraph") {
      throw_numerical("CyclicUnstableSubgraph",
                      "the unstable subgraph has a directed cycle; rescaling needs it acyclic");
    }
    throw;
  }

  RescaledEnsemble out;
  out.exponents.assign(static_cast<size_t>(ens.size()), 0);
  out.Q.reserve(static_cast<size_t>(ens.size()));

  double rho = 0.0;
  bool any_unstable_edge = false;
  for (const Edge& e : gu.edges()) {
    const double factor = transition_cost_factor(ens, e.from, e.to);
    rho = any_unstable_edge ? std::max(rho, factor) : factor;
    any_unstable_edge = true;
  }

  if (any_unstable_edge && rho > zeta) {
    out.base = rho / zeta;
    // Exponent groups along the topological order of the unstable subgraph:
    // unstable vertices with an unstable-source in-edge get 1, 2, ... in
    // order; every stable vertex entered from the unstable part gets one
    // exponent above them all. Each unstable edge then drops its factor by
    // base or more.
    std::vector<char> has_gu_inedge(static_cast<size_t>(ens.size()) + 1, 0);
    std::vector<char> incident(static_cast<size_t>(ens.size()) + 1, 0);
    for (const Edge& e : gu.edges()) {
      has_gu_inedge[static_cast<size_t>(e.to)] = 1;
      incident[static_cast<size_t>(e.from)] = 1;
      incident[static_cast<size_t>(e.to)] = 1;
    }
    int next_exponent = 1;
    for (int v : order) {
      if (v > part.stable_count && incident[static_cast<size_t>(v)] &&
          has_gu_inedge[static_cast<size_t>(v)]) {
        out.exponents[static_cast<size_t>(v - 1)] = next_exponent++;
      }
    }
    for (int v = 1; v <= part.stable_count; ++v) {
      if (has_gu_inedge[static_cast<size_t>(v)]) {
        out.exponents[static_cast<size_t>(v - 1)] = next_exponent;
      }
    }
  }

  for (int v = 1; v <= ens.size(); ++v) {
    if (!ens.at(v).has_usable_eigenvectors()) {
      throw_numerical("DefectiveEndpoint",
                      "subsystem " + std::to_string(v) +
                          " is defective and has no replacement eigenvector basis");
    }
    const double scale = std::pow(out.base, out.exponents[static_cast<size_t>(v - 1)]);
    out.Q.push_back(scale * ens.at(v).effective_eigenvectors());
  }

  const auto q_factor = [&](const Edge& e) {
    const Eigen::MatrixXcd& Qa = out.Q[static_cast<size_t>(e.from - 1)];
    const Eigen::MatrixXcd& Qb = out.Q[static_cast<size_t>(e.to - 1)];
    return spectral_norm(Eigen::MatrixXcd(Qb.partialPivLu().solve(Qa)));
  };
  for (const Edge& e : g.edges()) {
    const double factor = q_factor(e);
    if (e.from <= part.stable_count) {
      out.alpha_prime = out.alpha_prime ? std::max(*out.alpha_prime, factor) : factor;
    } else {
      out.rho_prime = out.rho_prime ? std::max(*out.rho_prime, factor) : factor;
    }
  }
  return out;
}

StabilityCertificate certify_acyclic_rescaled(const Ensemble& ens, const Digraph& g,
                                              Partition part, double tau, double eta,
                                              double zeta) {
  require_positive_pair(tau, eta);
  const RescaledEnsemble rescaled = rescale_eigenvectors(ens, g, part, zeta);

  StabilityCertificate cert;
  cert.criterion = "acyclic-rescaled";
  cert.assumptions.push_back("unstable subgraph is acyclic (checked)");
  cert.assumptions.push_back(partition_assumption(part, ens.size()));
  {
    std::ostringstream note;
    note << "bases rescaled with factor " << rescaled.base << " along the unstable "
         << "topological order";
    cert.assumptions.push_back(note.str());
  }

  std::optional<double> tau_threshold;
  std::optional<double> eta_threshold;
  for (const Edge& e : g.edges()) {
    const Eigen::MatrixXcd& Qa = rescaled.Q[static_cast<size_t>(e.from - 1)];
    const Eigen::MatrixXcd& Qb = rescaled.Q[static_cast<size_t>(e.to - 1)];
    const double log_factor = std::log(spectral_norm(Eigen::MatrixXcd(Qb.partialPivLu().solve(Qa))));
    if (e.from <= part.stable_count) {
      const double bound = log_factor / ens.at(e.from).decay_rate;
      tau_threshold = tau_threshold ? std::max(*tau_threshold, bound) : bound;
    } else {
      const double bound = -log_factor / ens.at(e.from).growth_rate;
      eta_threshold = eta_threshold ? std::min(*eta_threshold, bound) : bound;
    }
  }

  if (tau_threshold) {
    cert.inequalities.push_back(make_inequality(
        "tau threshold: max stable-edge ln||Q_j^{-1}Q_i|| / lambda_i < tau", *tau_threshold, tau));
  } else {
    cert.warnings.push_back("no stable-source edge: tau unconstrained");
  }
  if (eta_threshold) {
    cert.inequalities.push_back(make_inequality(
        "eta < min unstable-edge -ln||Q_j^{-1}Q_i|| / mu_i", eta, *eta_threshold));
  } else {
    cert.warnings.push_back("no unstable-source edge: eta unconstrained");
  }
  if (cert.inequalities.empty()) {
    // No edges at all: no switching can occur, nothing to certify against.
    throw_input("HypothesisViolation", "graph has no edges");
  }
  finalize(cert);
  return cert;
}

StabilityCertificate certify_commuting(const Ensemble& ens, const Digraph& g,
                                       std::optional<Partition> part, double tau, double eta,
                                       const SpectralTolerances& tol) {
  require_sizes_match(ens, g);
  require_positive_pair(tau, eta);
  for (int v = 1; v <= ens.size(); ++v) {
    if (!ens.at(v).diagonalizable()) {
      throw_numerical("DefectiveEndpoint",
                      "subsystem " + std::to_string(v) +
                          " is defective; the commuting criterion needs diagonalizable matrices");
    }
  }
  const CommutingCheck check = check_pairwise_commuting(ens, tol);
  if (!check.commuting) {
    throw_input("NotCommuting", "subsystem matrices do not pairwise commute within tolerance");
  }
  if (!check.common_basis) {
    throw_numerical("SimultaneousDiagonalizationFailure",
                    "could not compute a verified common eigenbasis");
  }

  const bool two_ring = ens.size() == 2 && is_unidirectional_ring(g);
  StabilityCertificate cert;
  cert.criterion = "commuting";
  cert.assumptions.push_back("subsystems pairwise commute (checked)");

  if (two_ring) {
    // Exact per-axis condition: in the common basis the flow decouples, and
    // one period multiplies axis i by exp(alpha_i tau + beta_i eta).
    const Eigen::MatrixXcd& P = *check.common_basis;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(P);
    const Eigen::MatrixXcd D1 = lu.solve(ens.at(1).A.cast<std::complex<double>>() * P);
    const Eigen::MatrixXcd D2 = lu.solve(ens.at(2).A.cast<std::complex<double>>() * P);
    cert.assumptions.push_back("two-vertex ring: per-axis rates are exact");
    for (int i = 0; i < ens.dimension(); ++i) {
      const double alpha = D1(i, i).real();
      const double beta = D2(i, i).real();
      std::ostringstream label;
      label << "axis " << (i + 1) << ": alpha tau + beta eta < 0 (alpha = " << alpha
            << ", beta = " << beta << ")";
      cert.inequalities.push_back(make_inequality(label.str(), alpha * tau + beta * eta, 0.0));
    }
    finalize(cert);
    return cert;
  }

  // General commuting graph: transition costs vanish in the common basis, so
  // the loopwise conditions reduce to pure rate balances.
  if (!part) part = ens.derived_partition();
  if (!part) {
    throw_input("PartitionRequired",
                "subsystems must be ordered stable-first for the general commuting reduction");
  }
  StabilityCertificate general = certify_general_uniform(ens, g, *part, tau, eta);
  cert.assumptions.push_back(
      "general graph: loopwise conditions re-evaluated with unit switch factors");
  cert.warnings.push_back(
      "rate-only reduction: switch factors are 1 in a common eigenbasis");
  const auto loops = enumerate_simple_loops(g);
  for (const SimpleLoop& loop : loops) {
    const LoopRates rates = loop_rates(ens, loop, *part);
    cert.inequalities.push_back(make_inequality(
        "loop " + loop_label(loop) + ": -lambda_i tau + mu_i eta < 0",
        -rates.lambda_sum * tau + rates.mu_sum * eta, 0.0));
  }
  finalize(cert);
  return cert;
}

}  // namespace swstab
