#include "swstab_cli/runner.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "swstab/certify.hpp"
#include "swstab/errors.hpp"
#include "swstab/simulate.hpp"

namespace swstab_cli {

namespace {

using nlohmann::json;
using namespace swstab;

std::string fmt6(double v) {
  std::ostringstream out;
  out << std::setprecision(6) << v;
  return out.str();
}

json json_or_null(const std::optional<double>& v) {
  if (v) return *v;
  return nullptr;
}

json vertices_json(const std::vector<int>& vertices) { return json(vertices); }

std::string vertices_text(const std::vector<int>& vertices) {
  std::ostringstream out;
  out << "(";
  for (size_t i = 0; i < vertices.size(); ++i) {
    if (i) out << ",";
    out << vertices[i];
  }
  out << ")";
  return out.str();
}

json hypotheses_json(const HypothesisReport& report) {
  json checks = json::array();
  for (const HypothesisCheck& check : report.checks) {
    checks.push_back({{"name", check.name}, {"pass", check.pass}, {"witness", check.witness}});
  }
  return json{{"all_pass", report.all_pass}, {"checks", checks}};
}

json certificate_json(const StabilityCertificate& cert) {
  json inequalities = json::array();
  for (const Inequality& q : cert.inequalities) {
    inequalities.push_back({{"holds", q.holds},
                            {"label", q.label},
                            {"margin", q.margin},
                            {"threshold", q.threshold},
                            {"value", q.value}});
  }
  return json{{"assumptions", cert.assumptions},
              {"criterion", cert.criterion},
              {"inequalities", inequalities},
              {"margin", cert.margin},
              {"verdict", cert.verdict == Verdict::Certified ? "Certified" : "NotCertified"},
              {"warnings", cert.warnings}};
}

void certificate_human(std::ostringstream& out, const StabilityCertificate& cert) {
  out << "certify " << cert.criterion << ": "
      << (cert.verdict == Verdict::Certified ? "Certified" : "NotCertified") << " (margin "
      << fmt6(cert.margin) << ")\n";
  for (const Inequality& q : cert.inequalities) {
    out << "  [" << (q.holds ? "ok" : "FAIL") << "] " << q.label << " | value " << fmt6(q.value)
        << " vs " << fmt6(q.threshold) << "\n";
  }
  for (const std::string& note : cert.assumptions) out << "  note: " << note << "\n";
  for (const std::string& warning : cert.warnings) out << "  warning: " << warning << "\n";
}

const SwitchingSignal& need_signal(const ProblemConfig& cfg) {
  if (!cfg.signal) {
    throw_input("MissingSignal", "this command needs signal.modes and signal.durations");
  }
  return *cfg.signal;
}

const SignalClassSpec& need_class(const ProblemConfig& cfg) {
  if (!cfg.class_spec) {
    throw_input("MissingClassSpec", "this command needs a class section (variant + params)");
  }
  return *cfg.class_spec;
}

Partition need_partition(const ProblemConfig& cfg, const Ensemble& ens) {
  const auto part = resolve_partition(cfg, ens);
  if (!part) {
    throw_input("MissingPartition",
                "this criterion needs a stable-first ensemble: order the stable subsystems "
                "before the unstable ones and keep every matrix diagonalizable");
  }
  return *part;
}

/// tau/eta of the dwell-flee class, shared by the mixed-case criteria.
std::pair<double, double> need_dwell_flee(const ProblemConfig& cfg) {
  const SignalClassSpec& spec = need_class(cfg);
  const auto* df = std::get_if<DwellFleeSpec>(&spec);
  if (!df) {
    throw_input("MissingClassSpec", "this criterion reads tau and eta from a dwell-flee class");
  }
  return {df->tau, df->eta};
}

void require_admissible(const SwitchingSignal& sig, const Digraph& g) {
  const AdmissibilityResult adm = check_admissible(sig, g);
  if (!adm.admissible) {
    throw_input("InadmissibleSignal", "mode pair at position " +
                                          std::to_string(adm.first_violation) +
                                          " does not follow a graph edge");
  }
}

bool has_constants(const ProblemConfig& cfg, std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    if (!cfg.constants.count(key)) return false;
  }
  return true;
}

RunResult run_loops(const ProblemConfig& cfg) {
  const Digraph g = build_graph(cfg);
  const auto loops = enumerate_simple_loops(g);
  const double bound = simple_loop_count_bound(g);

  RunResult result;
  json loop_array = json::array();
  for (size_t i = 0; i < loops.size(); ++i) {
    loop_array.push_back({{"id", static_cast<int>(i) + 1},
                          {"length", loops[i].length()},
                          {"vertices", vertices_json(loops[i].vertices)}});
  }
  result.report = json{{"command", "loops"},
                       {"k", cfg.k},
                       {"loop_count_bound", bound},
                       {"loops", loop_array},
                       {"warnings", json::array()}};

  std::ostringstream human;
  human << "k = " << cfg.k << ": " << loops.size() << " simple loop(s), trace bound "
        << fmt6(bound) << "\n";
  for (size_t i = 0; i < loops.size(); ++i) {
    human << "  s" << (i + 1) << " = " << vertices_text(loops[i].vertices) << "\n";
  }
  result.human = human.str();
  return result;
}

RunResult run_decompose(const ProblemConfig& cfg) {
  const Digraph g = build_graph(cfg);
  const SwitchingSignal& sig = need_signal(cfg);
  require_admissible(sig, g);
  const StandardDecomposition decomp = standard_decomposition(sig, g);

  RunResult result;
  json instances = json::array();
  for (size_t i = 0; i < decomp.instances.size(); ++i) {
    const LoopInstance& inst = decomp.instances[i];
    instances.push_back({{"edge_indices", inst.edge_indices},
                         {"index", static_cast<int>(i) + 1},
                         {"loop_id", inst.loop_id},
                         {"total_time", inst.total_time},
                         {"vertices", vertices_json(inst.loop.vertices)}});
  }
  result.report = json{{"command", "decompose"},
                       {"instances", instances},
                       {"residual_edge_indices", decomp.residual_edge_indices},
                       {"residual_vertices", decomp.residual_vertices},
                       {"warnings", json::array()}};

  std::ostringstream human;
  human << decomp.instances.size() << " loop instance(s)\n";
  for (size_t i = 0; i < decomp.instances.size(); ++i) {
    const LoopInstance& inst = decomp.instances[i];
    human << "  instance " << (i + 1) << ": s" << inst.loop_id << " "
          << vertices_text(inst.loop.vertices) << " edges {";
    for (size_t j = 0; j < inst.edge_indices.size(); ++j) {
      if (j) human << ",";
      human << inst.edge_indices[j];
    }
    human << "} time " << fmt6(inst.total_time) << "\n";
  }
  human << "  residual edges {";
  for (size_t j = 0; j < decomp.residual_edge_indices.size(); ++j) {
    if (j) human << ",";
    human << decomp.residual_edge_indices[j];
  }
  human << "} path " << vertices_text(decomp.residual_vertices) << "\n";
  result.human = human.str();
  return result;
}

RunResult run_bounds(const ProblemConfig& cfg) {
  const Digraph g = build_graph(cfg);
  const Ensemble ens = build_ensemble(cfg);
  const auto part = resolve_partition(cfg, ens);
  const HypothesisReport hypotheses = validate_hypotheses(g, part);
  const BoundsReport bounds = classical_bounds(ens, g);

  RunResult result;
  json loop_array = json::array();
  for (size_t i = 0; i < bounds.loops.size(); ++i) {
    const LoopBound& lb = bounds.loops[i];
    json row{{"available", lb.available},
             {"cost_sum", lb.cost_sum},
             {"cycle_ratio", json_or_null(lb.cycle_ratio)},
             {"id", static_cast<int>(i) + 1},
             {"lambda_min", lb.lambda_min},
             {"lambda_sum", lb.lambda_sum},
             {"mu_max", lb.mu_max},
             {"mu_sum", lb.mu_sum},
             {"nu", json_or_null(lb.nu)},
             {"vertices", vertices_json(lb.loop.vertices)}};
    if (!lb.available) row["unavailable_reason"] = lb.unavailable_reason;
    loop_array.push_back(std::move(row));
  }
  json edge_array = json::array();
  for (const EdgeCost& ec : bounds.edge_costs) {
    edge_array.push_back({{"available", ec.available},
                          {"cost", ec.cost},
                          {"from", ec.edge.from},
                          {"to", ec.edge.to}});
  }
  result.report = json{{"command", "bounds"},
                       {"edge_costs", edge_array},
                       {"hypotheses", hypotheses_json(hypotheses)},
                       {"loops", loop_array},
                       {"mu_G", json_or_null(bounds.mu_G)},
                       {"rho", json_or_null(bounds.rho)},
                       {"rho1", json_or_null(bounds.rho1)},
                       {"rho2", json_or_null(bounds.rho2)},
                       {"rho2_star", json_or_null(bounds.rho2_star)},
                       {"rho2_star_partial", bounds.rho2_star_partial},
                       {"rho_star", json_or_null(bounds.rho_star)},
                       {"rho_star_partial", bounds.rho_star_partial},
                       {"warnings", bounds.warnings}};

  std::ostringstream human;
  human << "bounds over " << bounds.loops.size() << " loop(s)\n";
  for (size_t i = 0; i < bounds.loops.size(); ++i) {
    const LoopBound& lb = bounds.loops[i];
    human << "  s" << (i + 1) << " " << vertices_text(lb.loop.vertices) << ": ";
    if (!lb.available) {
      human << "unavailable (" << lb.unavailable_reason << ")\n";
      continue;
    }
    human << "cost " << fmt6(lb.cost_sum);
    if (lb.nu) human << ", nu " << fmt6(*lb.nu);
    if (lb.cycle_ratio) human << ", cycle ratio " << fmt6(*lb.cycle_ratio);
    human << "\n";
  }
  if (bounds.mu_G) human << "  mu_G = " << fmt6(*bounds.mu_G) << "\n";
  if (bounds.rho_star) {
    human << "  rho* = " << fmt6(*bounds.rho_star)
          << (bounds.rho_star_partial ? " (partial)" : "") << "\n";
  }
  if (bounds.rho2_star) {
    human << "  rho2* = " << fmt6(*bounds.rho2_star)
          << (bounds.rho2_star_partial ? " (partial)" : "") << "\n";
  }
  if (bounds.rho) human << "  rho = " << fmt6(*bounds.rho) << "\n";
  for (const std::string& warning : bounds.warnings) human << "  warning: " << warning << "\n";
  result.human = human.str();
  return result;
}

/// Certificate plus criterion-specific extras, shared by certify and
/// validate.
struct BuiltCertificate {
  StabilityCertificate certificate;
  json details = json::object();
};

BuiltCertificate build_certificate(const ProblemConfig& cfg, const RunFlags& flags,
                                   const Digraph& g, const Ensemble& ens) {
  const std::string& criterion = flags.criterion;
  if (criterion.empty()) {
    throw_input("MissingCriterion", "certify and validate need --criterion <name>");
  }
  BuiltCertificate built;

  if (criterion == "simple-loop-dwell") {
    const SignalClassSpec& spec = need_class(cfg);
    const auto* sld = std::get_if<SimpleLoopDwellSpec>(&spec);
    if (!sld) {
      throw_input("MissingClassSpec",
                  "simple-loop-dwell reads its tau vector from a simple-loop-dwell class");
    }
    built.certificate = certify_simple_loop_dwell(ens, g, sld->tau);
  } else if (criterion == "loop-aggregate") {
    if (cfg.aggregate_loops.empty()) {
      throw_input("NotALoop", "loop-aggregate needs aggregate_loops entries in the config");
    }
    built.certificate = certify_loop_aggregate(ens, g, cfg.aggregate_loops);
  } else if (criterion == "ring-uniform") {
    const auto [tau, eta] = need_dwell_flee(cfg);
    if (has_constants(cfg, {"log_rho", "lambda_sum", "mu_sum"})) {
      const RingConstants c{cfg.constants.at("log_rho"), cfg.constants.at("lambda_sum"),
                            cfg.constants.at("mu_sum")};
      built.certificate = certify_ring_uniform(c, tau, eta);
      built.certificate.warnings.push_back(
          "constants supplied by the config; the ensemble was not consulted");
    } else {
      built.certificate = certify_ring_uniform(ens, g, need_partition(cfg, ens), tau, eta);
    }
  } else if (criterion == "ring-loopwise") {
    const auto [tau, eta] = need_dwell_flee(cfg);
    if (has_constants(cfg, {"log_rho", "lambda_min", "mu_max"})) {
      const RingLoopwiseConstants c{cfg.constants.at("log_rho"), cfg.constants.at("lambda_min"),
                                    cfg.constants.at("mu_max")};
      built.certificate = certify_ring_loopwise(c, tau, eta);
      built.certificate.warnings.push_back(
          "constants supplied by the config; the ensemble was not consulted");
    } else {
      built.certificate = certify_ring_loopwise(ens, g, need_partition(cfg, ens), tau, eta);
    }
  } else if (criterion == "bipartite") {
    const auto [tau, eta] = need_dwell_flee(cfg);
    built.certificate = certify_bipartite(ens, g, need_partition(cfg, ens), tau, eta);
  } else if (criterion == "general-uniform") {
    const auto [tau, eta] = need_dwell_flee(cfg);
    built.certificate = certify_general_uniform(ens, g, need_partition(cfg, ens), tau, eta);
  } else if (criterion == "general-loopwise") {
    const SignalClassSpec& spec = need_class(cfg);
    const auto* lw = std::get_if<LoopwiseDwellFleeSpec>(&spec);
    if (!lw) {
      throw_input("MissingClassSpec",
                  "general-loopwise reads tau/eta vectors from a loopwise-dwell-flee class");
    }
    built.certificate =
        certify_general_loopwise(ens, g, need_partition(cfg, ens), lw->tau, lw->eta);
  } else if (criterion == "switch-count") {
    const auto [tau, eta] = need_dwell_flee(cfg);
    const SwitchingSignal& sig = need_signal(cfg);
    const Partition part = need_partition(cfg, ens);
    int horizon = flags.horizon.value_or(cfg.horizon);
    if (horizon == 0) horizon = sig.length();
    SwitchCountResult sc;
    if (has_constants(cfg, {"log_rho1", "log_rho2", "lambda", "mu"})) {
      const SwitchCountConstants c{cfg.constants.at("log_rho1"), cfg.constants.at("log_rho2"),
                                   cfg.constants.at("lambda"), cfg.constants.at("mu")};
      sc = certify_switch_count(c, part, sig, tau, eta, horizon);
      sc.certificate.warnings.push_back(
          "constants supplied by the config; the ensemble was not consulted");
    } else {
      sc = certify_switch_count(ens, g, part, tau, eta, sig, horizon);
    }
    built.certificate = sc.certificate;
    built.details["series"] = sc.series;
    built.details["slope"] = sc.slope;
    built.details["threshold_ratio"] = json_or_null(sc.threshold_ratio);
  } else if (criterion == "acyclic-rescaled") {
    const auto [tau, eta] = need_dwell_flee(cfg);
    const Partition part = need_partition(cfg, ens);
    built.certificate = certify_acyclic_rescaled(ens, g, part, tau, eta, cfg.zeta);
    const RescaledEnsemble rescaled = rescale_eigenvectors(ens, g, part, cfg.zeta);
    built.details["rescaling"] = json{{"alpha_prime", json_or_null(rescaled.alpha_prime)},
                                      {"base", rescaled.base},
                                      {"exponents", rescaled.exponents},
                                      {"rho_prime", json_or_null(rescaled.rho_prime)},
                                      {"zeta", cfg.zeta}};
  } else if (criterion == "commuting") {
    const auto [tau, eta] = need_dwell_flee(cfg);
    built.certificate =
        certify_commuting(ens, g, resolve_partition(cfg, ens), tau, eta, cfg.tolerances);
  } else {
    throw_input("UnknownCriterion", "unknown certify criterion '" + criterion + "'");
  }
  return built;
}

RunResult run_certify(const ProblemConfig& cfg, const RunFlags& flags) {
  const Digraph g = build_graph(cfg);
  const Ensemble ens = build_ensemble(cfg);
  const BuiltCertificate built = build_certificate(cfg, flags, g, ens);

  RunResult result;
  result.report = json{{"command", "certify"}, {"certificate", certificate_json(built.certificate)}};
  if (!built.details.empty()) result.report["details"] = built.details;
  std::ostringstream human;
  certificate_human(human, built.certificate);
  result.human = human.str();
  result.exit_code = built.certificate.verdict == Verdict::Certified ? 0 : 1;
  return result;
}

RunResult run_simulate(const ProblemConfig& cfg, const RunFlags& flags) {
  const Digraph g = build_graph(cfg);
  const Ensemble ens = build_ensemble(cfg);
  const SwitchingSignal& sig = need_signal(cfg);
  require_admissible(sig, g);

  Eigen::VectorXd x0;
  if (cfg.x0) {
    if (static_cast<int>(cfg.x0->size()) != ens.dimension()) {
      throw_input("DimensionMismatch", "x0 has " + std::to_string(cfg.x0->size()) +
                                           " coordinates, subsystems have " +
                                           std::to_string(ens.dimension()));
    }
    x0 = Eigen::Map<const Eigen::VectorXd>(cfg.x0->data(), static_cast<int>(cfg.x0->size()));
  } else {
    x0 = Eigen::VectorXd::Zero(ens.dimension());
    x0(0) = 1.0;
  }
  const int samples = flags.samples.value_or(cfg.samples_per_interval);
  const Trajectory traj = simulate(ens, sig, x0, samples);

  RunResult result;
  json warnings = json::array();
  result.report = json{{"command", "simulate"},
                       {"samples", static_cast<int>(traj.times.size())},
                       {"switch_log_norms", traj.switch_log_norms},
                       {"switch_times", traj.switch_times},
                       {"terminal_log_norm", traj.switch_log_norms.back()},
                       {"total_time", sig.total_time()}};

  std::ostringstream human;
  human << "simulated " << sig.length() << " interval(s), total time " << fmt6(sig.total_time())
        << "\n";
  human << "  ln||x(end)|| = " << fmt6(traj.switch_log_norms.back()) << "\n";

  // The envelope needs every vertex basis; keep the trajectory useful when a
  // defective subsystem blocks it.
  try {
    const EnvelopeSeries env = envelope(ens, g, sig);
    json loop_terms = json::array();
    for (const LoopTerm& term : env.loop_terms) {
      loop_terms.push_back({{"bound_term", json_or_null(term.bound_term)},
                            {"cost_sum", term.cost_sum},
                            {"exact_term", term.exact_term},
                            {"instance", term.instance_index},
                            {"rate_time_sum", term.rate_time_sum}});
    }
    json env_json{{"log_a", env.log_a},
                  {"loop_terms", loop_terms},
                  {"residual_log_cost", env.residual_log_cost},
                  {"rho", env.rho}};
    if (x0.norm() > 0.0) {
      const EnvelopeCheck check = envelope_check(ens, g, sig, x0);
      env_json["check"] = json{{"first_violation", check.first_violation},
                               {"max_log_excess", check.max_log_excess},
                               {"ok", check.ok}};
      human << "  envelope " << (check.ok ? "holds" : "VIOLATED") << " (max log excess "
            << fmt6(check.max_log_excess) << ", rho " << fmt6(env.rho) << ")\n";
    } else {
      warnings.push_back("envelope comparison skipped: zero start state");
    }
    result.report["envelope"] = env_json;
  } catch (const Error& e) {
    if (e.category() == ErrorCategory::InvalidInput) throw;
    warnings.push_back(std::string("envelope unavailable: ") + e.what());
    human << "  envelope unavailable: " << e.what() << "\n";
  }
  result.report["warnings"] = warnings;

  if (flags.want_trace) {
    std::ostringstream csv;
    csv << std::setprecision(17);
    csv << "t,mode,norm";
    for (int i = 1; i <= ens.dimension(); ++i) csv << ",x" << i;
    csv << "\n";
    for (size_t s = 0; s < traj.times.size(); ++s) {
      csv << traj.times[s] << "," << traj.sample_modes[s] << "," << traj.norms[s];
      for (int i = 0; i < traj.states[s].size(); ++i) csv << "," << traj.states[s](i);
      csv << "\n";
    }
    result.trace = csv.str();
  }
  result.human = human.str();
  return result;
}

RunResult run_validate(const ProblemConfig& cfg, const RunFlags& flags) {
  const Digraph g = build_graph(cfg);
  const Ensemble ens = build_ensemble(cfg);
  const BuiltCertificate built = build_certificate(cfg, flags, g, ens);
  const SignalClassSpec& spec = need_class(cfg);
  const auto part = resolve_partition(cfg, ens);
  const int trials = flags.trials.value_or(cfg.trials);
  int horizon = flags.horizon.value_or(cfg.horizon);
  if (horizon == 0) horizon = 200;
  const std::uint64_t seed = flags.seed.value_or(cfg.seed);

  const ValidationReport report =
      validate_certificate(ens, g, built.certificate, spec, part, trials, horizon, seed);

  RunResult result;
  result.report = json{{"certificate", certificate_json(built.certificate)},
                       {"command", "validate"},
                       {"validation", json{{"horizon", horizon},
                                           {"max_slope", report.max_slope},
                                           {"max_terminal_log_ratio", report.max_terminal_log_ratio},
                                           {"pass", report.pass},
                                           {"seed", seed},
                                           {"slopes", report.slopes},
                                           {"trials", report.trials}}}};
  if (!built.details.empty()) result.report["details"] = built.details;

  std::ostringstream human;
  certificate_human(human, built.certificate);
  human << "validation over " << trials << " trial(s), horizon " << horizon << ": "
        << (report.pass ? "PASS" : "FAIL") << "\n";
  human << "  max slope " << fmt6(report.max_slope) << ", max terminal log ratio "
        << fmt6(report.max_terminal_log_ratio) << "\n";
  result.human = human.str();
  result.exit_code = report.pass ? 0 : 1;
  return result;
}

RunResult run_synth(const ProblemConfig& cfg, const RunFlags& flags) {
  const Digraph g = build_graph(cfg);
  const Ensemble ens = build_ensemble(cfg);
  const SignalClassSpec& spec = need_class(cfg);
  const auto part = resolve_partition(cfg, ens);
  const int length = flags.length.value_or(cfg.synth_length);
  const std::uint64_t seed = flags.seed.value_or(cfg.seed);

  const SwitchingSignal sig = synthesize_signal(g, spec, length, seed, part);
  const MembershipResult membership = class_membership(sig, g, spec, part);

  RunResult result;
  result.report = json{{"command", "synth"},
                       {"length", length},
                       {"membership", json{{"checked_constraints", membership.checked_constraints},
                                           {"member", membership.member}}},
                       {"seed", seed},
                       {"signal", json{{"durations", sig.durations}, {"modes", sig.modes}}},
                       {"total_time", sig.total_time()},
                       {"warnings", json::array()}};

  std::ostringstream human;
  human << "synthesized " << length << " interval(s), seed " << seed << ", total time "
        << fmt6(sig.total_time()) << "\n";
  human << "  class membership: " << (membership.member ? "ok" : "VIOLATED") << " ("
        << membership.checked_constraints << " constraint(s))\n";
  result.human = human.str();
  return result;
}

}  // namespace

RunResult run_command(const std::string& command, const ProblemConfig& cfg,
                      const RunFlags& flags) {
  if (command == "loops") return run_loops(cfg);
  if (command == "decompose") return run_decompose(cfg);
  if (command == "bounds") return run_bounds(cfg);
  if (command == "certify") return run_certify(cfg, flags);
  if (command == "simulate") return run_simulate(cfg, flags);
  if (command == "validate") return run_validate(cfg, flags);
  if (command == "synth") return run_synth(cfg, flags);
  throw_input("UnknownCommand", "unknown command '" + command + "'");
}

}  // namespace swstab_cli
