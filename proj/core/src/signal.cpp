#include "swstab/signal.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "swstab/errors.hpp"

namespace swstab {

double SwitchingSignal::total_time() const {
  return std::accumulate(durations.begin(), durations.end(), 0.0);
}

std::vector<double> SwitchingSignal::switch_times() const {
  std::vector<double> t(durations.size() + 1, 0.0);
  for (size_t n = 0; n < durations.size(); ++n) t[n + 1] = t[n] + durations[n];
  return t;
}

void validate_signal(const SwitchingSignal& sig) {
  if (sig.modes.empty()) {
    throw_input("InvalidSignal", "signal needs at least one mode");
  }
  if (sig.modes.size() != sig.durations.size()) {
    throw_input("InvalidSignal", "modes and durations must have equal length");
  }
  for (size_t n = 0; n < sig.durations.size(); ++n) {
    if (!(sig.durations[n] > 0.0) || !std::isfinite(sig.durations[n])) {
      throw_input("InvalidSignal",
                  "duration " + std::to_string(n + 1) + " must be strictly positive");
    }
  }
}

AdmissibilityResult check_admissible(const SwitchingSignal& sig, const Digraph& g) {
  validate_signal(sig);
  for (int m : sig.modes) {
    if (m < 1 || m > g.vertex_count()) {
      throw_input("InvalidSignal", "mode " + std::to_string(m) + " is not a graph vertex");
    }
  }
  for (size_t n = 0; n + 1 < sig.modes.size(); ++n) {
    if (!g.has_edge(sig.modes[n], sig.modes[n + 1])) {
      return AdmissibilityResult{false, static_cast<int>(n + 1)};
    }
  }
  return AdmissibilityResult{true, 0};
}

namespace {

struct PendingEdge {
  int index = 0;  // 1-based position in the signal's edge sequence
  int from = 0;
  int to = 0;
  double duration = 0.0;
};

}  // namespace

StandardDecomposition standard_decomposition(const SwitchingSignal& sig, const Digraph& g) {
  return standard_decomposition(sig, g, enumerate_simple_loops(g));
}

StandardDecomposition standard_decomposition(const SwitchingSignal& sig, const Digraph& g,
                                             const std::vector<SimpleLoop>& loops) {
  const AdmissibilityResult adm = check_admissible(sig, g);
  if (!adm.admissible) {
    throw_input("InadmissibleSignal", "mode pair at position " +
                                          std::to_string(adm.first_violation) +
                                          " does not follow a graph edge");
  }

  std::map<std::vector<int>, int> loop_ids;
  for (size_t i = 0; i < loops.size(); ++i) {
    loop_ids[loops[i].vertices] = static_cast<int>(i + 1);
  }

  std::vector<PendingEdge> remaining;
  for (size_t n = 0; n + 1 < sig.modes.size(); ++n) {
    remaining.push_back(PendingEdge{static_cast<int>(n + 1), sig.modes[n], sig.modes[n + 1],
                                    sig.durations[n]});
  }

  StandardDecomposition result;
  bool extracted = true;
  while (extracted && !remaining.empty()) {
    extracted = false;
    // Vertex sequence of the current scan: v_0 = first source, then each
    // target. first_seen_at maps a vertex to its position in that sequence.
    std::map<int, size_t> first_seen_at;
    first_seen_at[remaining.front().from] = 0;
    for (size_t q = 0; q < remaining.size(); ++q) {
      const int v = remaining[q].to;
      auto it = first_seen_at.find(v);
      if (it == first_seen_at.end()) {
        first_seen_at[v] = q + 1;
        continue;
      }
      // Vertex v closed a loop: edges p..q span the segment between its two
      // occurrences in the scan.
      const size_t p = it->second;
      LoopInstance instance;
      std::vector<int> cycle;
      for (size_t j = p; j <= q; ++j) {
        instance.edge_indices.push_back(remaining[j].index);
        instance.total_time += remaining[j].duration;
        cycle.push_back(remaining[j].from);
      }
      instance.loop = canonical_loop(cycle);
      auto id_it = loop_ids.find(instance.loop.vertices);
      if (id_it == loop_ids.end()) {
        // The signal follows graph edges, so every closed segment is a loop
        // of the graph; reaching this line means the loop list is stale.
        throw_input("InvalidLoop", "extracted loop is missing from the canonical loop list");
      }
      instance.loop_id = id_it->second;
      result.instances.push_back(std::move(instance));
      remaining.erase(remaining.begin() + static_cast<long>(p),
                      remaining.begin() + static_cast<long>(q + 1));
      extracted = true;
      break;
    }
  }

  for (const PendingEdge& e : remaining) result.residual_edge_indices.push_back(e.index);
  if (remaining.empty()) {
    result.residual_vertices = {sig.modes.back()};
  } else {
    result.residual_vertices.push_back(remaining.front().from);
    for (const PendingEdge& e : remaining) result.residual_vertices.push_back(e.to);
  }
  return result;
}

void validate_class_spec(const SignalClassSpec& spec) {
  const auto positive = [](double x, const char* what) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw_input("InvalidClassSpec", std::string(what) + " must be strictly positive");
    }
  };
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DwellSpec>) {
          positive(s.tau, "tau");
        } else if constexpr (std::is_same_v<T, SimpleLoopDwellSpec>) {
          if (s.tau.empty()) throw_input("InvalidClassSpec", "tau list must not be empty");
          for (double t : s.tau) positive(t, "tau");
        } else if constexpr (std::is_same_v<T, DwellFleeSpec>) {
          positive(s.tau, "tau");
          positive(s.eta, "eta");
        } else {
          if (s.tau.size() != s.eta.size() || s.tau.empty()) {
            throw_input("InvalidClassSpec", "tau and eta lists must be nonempty and equal length");
          }
          for (double t : s.tau) positive(t, "tau");
          for (double e : s.eta) positive(e, "eta");
        }
      },
      spec);
}

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

void check_constraint(MembershipResult& result, const std::string& label, double slack) {
  ++result.checked_constraints;
  if (slack < 0.0) {
    result.member = false;
    result.violations.push_back(MembershipViolation{label, slack});
  }
}

/// Stable/unstable dwell sums of one loop instance: edge e_n carries the
/// duration spent in its source mode.
std::pair<double, double> instance_class_times(const LoopInstance& inst,
                                               const SwitchingSignal& sig, Partition part) {
  double stable_time = 0.0, unstable_time = 0.0;
  for (int n : inst.edge_indices) {
    const int source = sig.modes[static_cast<size_t>(n - 1)];
    const double d = sig.durations[static_cast<size_t>(n - 1)];
    (source <= part.stable_count ? stable_time : unstable_time) += d;
  }
  return {stable_time, unstable_time};
}

}  // namespace

MembershipResult class_membership(const SwitchingSignal& sig, const Digraph& g,
                                  const SignalClassSpec& spec, std::optional<Partition> part) {
  validate_class_spec(spec);
  const AdmissibilityResult adm = check_admissible(sig, g);
  if (!adm.admissible) {
    throw_input("InadmissibleSignal", "mode pair at position " +
                                          std::to_string(adm.first_violation) +
                                          " does not follow a graph edge");
  }

  MembershipResult result;

  if (const auto* dwell = std::get_if<DwellSpec>(&spec)) {
    for (size_t n = 0; n < sig.durations.size(); ++n) {
      std::ostringstream label;
      label << "d_" << (n + 1) << " >= tau";
      check_constraint(result, label.str(), sig.durations[n] - dwell->tau);
    }
    return result;
  }

  if (const auto* sld = std::get_if<SimpleLoopDwellSpec>(&spec)) {
    const auto loops = enumerate_simple_loops(g);
    if (sld->tau.size() != loops.size()) {
      throw_input("InvalidClassSpec",
                  "need one tau per simple loop: graph has " + std::to_string(loops.size()) +
                      ", got " + std::to_string(sld->tau.size()));
    }
    // Instances of every prefix are instances of the full decomposition
    // (appending an edge never changes earlier extractions), so the full
    // decomposition covers all prefixes.
    const auto dec = standard_decomposition(sig, g, loops);
    for (const LoopInstance& inst : dec.instances) {
      std::ostringstream label;
      label << "loop " << loop_label(inst.loop) << " instance time " << inst.total_time
            << " >= tau_" << inst.loop_id;
      check_constraint(result, label.str(),
                       inst.total_time - sld->tau[static_cast<size_t>(inst.loop_id - 1)]);
    }
    return result;
  }

  if (!part) {
    throw_input("MissingPartition",
                    "this signal class needs the stable/unstable partition");
  }

  if (const auto* df = std::get_if<DwellFleeSpec>(&spec)) {
    for (size_t n = 0; n < sig.durations.size(); ++n) {
      const bool stable = sig.modes[n] <= part->stable_count;
      std::ostringstream label;
      if (stable) {
        label << "d_" << (n + 1) << " >= tau (stable mode " << sig.modes[n] << ")";
        check_constraint(result, label.str(), sig.durations[n] - df->tau);
      } else {
        label << "d_" << (n + 1) << " <= eta (unstable mode " << sig.modes[n] << ")";
        check_constraint(result, label.str(), df->eta - sig.durations[n]);
      }
    }
    return result;
  }

  const auto& lw = std::get<LoopwiseDwellFleeSpec>(spec);
  const auto loops = enumerate_simple_loops(g);
  if (lw.tau.size() != loops.size()) {
    throw_input("InvalidClassSpec",
                "need one (tau, eta) pair per simple loop: graph has " +
                    std::to_string(loops.size()) + ", got " + std::to_string(lw.tau.size()));
  }
  const auto dec = standard_decomposition(sig, g, loops);
  for (const LoopInstance& inst : dec.instances) {
    const auto [stable_time, unstable_time] = instance_class_times(inst, sig, *part);
    const size_t i = static_cast<size_t>(inst.loop_id - 1);
    {
      std::ostringstream label;
      label << "loop " << loop_label(inst.loop) << " stable time " << stable_time << " >= tau_"
            << inst.loop_id;
      check_constraint(result, label.str(), stable_time - lw.tau[i]);
    }
    {
      std::ostringstream label;
      label << "loop " << loop_label(inst.loop) << " unstable time " << unstable_time
            << " <= eta_" << inst.loop_id;
      check_constraint(result, label.str(), lw.eta[i] - unstable_time);
    }
  }
  return result;
}

std::pair<int, int> switch_counters(const SwitchingSignal& sig, Partition part, int prefix) {
  validate_signal(sig);
  if (prefix < 0 || prefix > sig.length()) {
    throw_input("InvalidPrefix", "prefix must lie in [0, signal length]");
  }
  int stable = 0;
  for (int n = 0; n < prefix; ++n) {
    if (sig.modes[static_cast<size_t>(n)] <= part.stable_count) ++stable;
  }
  return {stable, prefix - stable};
}

namespace {

/// Scale selected durations of one instance so its aggregate meets a floor
/// (grow = true) or a ceiling (grow = false).
void rescale_instance(SwitchingSignal& sig, const LoopInstance& inst, Partition part,
                      bool stable_positions, double target, bool grow) {
  double current = 0.0;
  std::vector<size_t> positions;
  for (int n : inst.edge_indices) {
    const size_t idx = static_cast<size_t>(n - 1);
    const bool stable = sig.modes[idx] <= part.stable_count;
    if (stable == stable_positions) {
      positions.push_back(idx);
      current += sig.durations[idx];
    }
  }
  if (positions.empty()) return;
  const double factor = target / current;
  if ((grow && factor > 1.0) || (!grow && factor < 1.0)) {
    for (size_t idx : positions) sig.durations[idx] *= factor;
  }
}

}  // namespace

SwitchingSignal synthesize_signal(const Digraph& g, const SignalClassSpec& spec, int length,
                                  std::uint64_t seed, std::optional<Partition> part) {
  validate_class_spec(spec);
  if (length < 1) {
    throw_input("InvalidLength", "signal length must be at least 1");
  }
  const bool needs_partition = std::holds_alternative<DwellFleeSpec>(spec) ||
                               std::holds_alternative<LoopwiseDwellFleeSpec>(spec);
  if (needs_partition && !part) {
    throw_input("MissingPartition", "this signal class needs the stable/unstable partition");
  }

  std::mt19937_64 rng(seed);

  // Random walk over out-edges. Starting vertices must be able to sustain the
  // walk; a dead end mid-walk is a synthesis failure, not silently shortened.
  std::vector<int> starts;
  for (int v = 1; v <= g.vertex_count(); ++v) {
    if (g.out_degree(v) > 0 || length == 1) starts.push_back(v);
  }
  if (starts.empty()) {
    throw_input("SynthesisFailure", "no vertex has an outgoing edge");
  }
  SwitchingSignal sig;
  sig.modes.reserve(static_cast<size_t>(length));
  std::uniform_int_distribution<size_t> start_pick(0, starts.size() - 1);
  sig.modes.push_back(starts[start_pick(rng)]);
  for (int n = 1; n < length; ++n) {
    const auto& next = g.successors(sig.modes.back());
    if (next.empty()) {
      throw_input("SynthesisFailure",
                  "random walk reached sink vertex " + std::to_string(sig.modes.back()));
    }
    std::uniform_int_distribution<size_t> pick(0, next.size() - 1);
    sig.modes.push_back(next[pick(rng)]);
  }

  // Initial durations: conservative guesses per variant, then repair.
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Partition p = part.value_or(Partition{g.vertex_count()});
  sig.durations.resize(static_cast<size_t>(length));
  for (int n = 0; n < length; ++n) {
    const size_t idx = static_cast<size_t>(n);
    const bool stable = sig.modes[idx] <= p.stable_count;
    double d = 0.5 + unit(rng);
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, DwellSpec>) {
            d = s.tau * (1.0 + unit(rng));
          } else if constexpr (std::is_same_v<T, DwellFleeSpec>) {
            d = stable ? s.tau * (1.0 + unit(rng)) : s.eta * (0.25 + 0.5 * unit(rng));
          } else if constexpr (std::is_same_v<T, LoopwiseDwellFleeSpec>) {
            if (!stable) d = 0.1 + 0.2 * unit(rng);
          }
        },
        spec);
    sig.durations[idx] = d;
  }

  for (int round = 0; round < 16; ++round) {
    const MembershipResult membership = class_membership(sig, g, spec, part);
    if (membership.member) return sig;

    if (const auto* dwell = std::get_if<DwellSpec>(&spec)) {
      for (auto& d : sig.durations) d = std::max(d, dwell->tau * (1.0 + 0.05 * unit(rng)));
    } else if (const auto* sld = std::get_if<SimpleLoopDwellSpec>(&spec)) {
      const auto dec = standard_decomposition(sig, g);
      for (const LoopInstance& inst : dec.instances) {
        const double floor = sld->tau[static_cast<size_t>(inst.loop_id - 1)];
        if (inst.total_time < floor) {
          const double factor = floor * (1.0 + 0.05 * unit(rng)) / inst.total_time;
          for (int n : inst.edge_indices) sig.durations[static_cast<size_t>(n - 1)] *= factor;
        }
      }
    } else if (const auto* df = std::get_if<DwellFleeSpec>(&spec)) {
      for (size_t n = 0; n < sig.durations.size(); ++n) {
        if (sig.modes[n] <= p.stable_count) {
          sig.durations[n] = std::max(sig.durations[n], df->tau * (1.0 + 0.05 * unit(rng)));
        } else {
          sig.durations[n] = std::min(sig.durations[n], df->eta * (0.6 + 0.3 * unit(rng)));
        }
      }
    } else {
      const auto& lw = std::get<LoopwiseDwellFleeSpec>(spec);
      const auto dec = standard_decomposition(sig, g);
      for (const LoopInstance& inst : dec.instances) {
        const size_t i = static_cast<size_t>(inst.loop_id - 1);
        const auto [stable_time, unstable_time] = instance_class_times(inst, sig, p);
        bool has_stable = false;
        for (int n : inst.edge_indices) {
          if (sig.modes[static_cast<size_t>(n - 1)] <= p.stable_count) has_stable = true;
        }
        if (!has_stable) {
          throw_input("SynthesisFailure",
                      "loop instance " + loop_label(inst.loop) +
                          " has no stable-source edge, its dwell floor is unsatisfiable");
        }
        if (stable_time < lw.tau[i]) {
          rescale_instance(sig, inst, p, true, lw.tau[i] * (1.0 + 0.05 * unit(rng)), true);
        }
        if (unstable_time > lw.eta[i]) {
          rescale_instance(sig, inst, p, false, lw.eta[i] * (0.9 - 0.05 * unit(rng)), false);
        }
      }
    }
  }

  const MembershipResult final_check = class_membership(sig, g, spec, part);
  if (final_check.member) return sig;
  throw_input("SynthesisFailure", "duration repair did not converge: " +
                                      final_check.violations.front().constraint);
}

}  // namespace swstab
