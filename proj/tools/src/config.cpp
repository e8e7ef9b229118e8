#include "swstab_cli/config.hpp"

#include <cmath>

#include "swstab/errors.hpp"

namespace swstab_cli {

namespace {

using nlohmann::json;
using swstab::throw_input;

[[noreturn]] void schema_error(const std::string& path, const std::string& reason) {
  throw_input("SchemaError", path + ": " + reason);
}

const json& require_field(const json& obj, const std::string& path, const std::string& key) {
  if (!obj.is_object()) schema_error(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) schema_error(path + "." + key, "missing required field");
  return *it;
}

int require_int(const json& node, const std::string& path) {
  if (!node.is_number_integer()) schema_error(path, "expected an integer");
  return node.get<int>();
}

double require_number(const json& node, const std::string& path) {
  if (!node.is_number()) schema_error(path, "expected a number");
  const double value = node.get<double>();
  if (!std::isfinite(value)) schema_error(path, "expected a finite number");
  return value;
}

std::vector<double> require_number_array(const json& node, const std::string& path) {
  if (!node.is_array()) schema_error(path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(node.size());
  for (size_t i = 0; i < node.size(); ++i) {
    out.push_back(require_number(node[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<int> require_int_array(const json& node, const std::string& path) {
  if (!node.is_array()) schema_error(path, "expected an array of integers");
  std::vector<int> out;
  out.reserve(node.size());
  for (size_t i = 0; i < node.size(); ++i) {
    out.push_back(require_int(node[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

void parse_graph(const json& root, ProblemConfig& cfg) {
  const json& graph = require_field(root, "", "graph");
  cfg.k = require_int(require_field(graph, "graph", "k"), "graph.k");
  if (cfg.k < 1) schema_error("graph.k", "vertex count must be at least 1");
  const json& edges = require_field(graph, "graph", "edges");
  if (!edges.is_array()) schema_error("graph.edges", "expected an array of 2-arrays");
  for (size_t i = 0; i < edges.size(); ++i) {
    const std::string path = "graph.edges[" + std::to_string(i) + "]";
    const json& pair = edges[i];
    if (!pair.is_array() || pair.size() != 2) schema_error(path, "expected a 2-array [from, to]");
    const int from = require_int(pair[0], path + "[0]");
    const int to = require_int(pair[1], path + "[1]");
    if (from < 1 || from > cfg.k || to < 1 || to > cfg.k) {
      schema_error(path, "vertex indices are 1-based and must lie in [1, graph.k]");
    }
    cfg.edges.push_back({from, to});
  }
}

void parse_systems(const json& root, ProblemConfig& cfg) {
  const json& systems = require_field(root, "", "systems");
  if (!systems.is_array() || systems.empty()) {
    schema_error("systems", "expected a nonempty array of matrices");
  }
  for (size_t i = 0; i < systems.size(); ++i) {
    const std::string path = "systems[" + std::to_string(i) + "]";
    const json& entry = systems[i];
    SystemConfig sys;
    sys.n = require_int(require_field(entry, path, "n"), path + ".n");
    if (sys.n < 1) schema_error(path + ".n", "dimension must be at least 1");
    sys.values = require_number_array(require_field(entry, path, "values"), path + ".values");
    if (sys.values.size() != static_cast<size_t>(sys.n) * static_cast<size_t>(sys.n)) {
      schema_error(path + ".values", "expected n*n row-major entries");
    }
    if (entry.contains("override_basis")) {
      sys.override_basis = require_number_array(entry["override_basis"], path + ".override_basis");
      if (sys.override_basis->size() != sys.values.size()) {
        schema_error(path + ".override_basis", "expected n*n row-major entries");
      }
    }
    cfg.systems.push_back(std::move(sys));
  }
  if (static_cast<int>(cfg.systems.size()) != cfg.k) {
    schema_error("systems", "expected one matrix per graph vertex (graph.k = " +
                                std::to_string(cfg.k) + ")");
  }
}

void parse_signal(const json& root, ProblemConfig& cfg) {
  if (!root.contains("signal")) return;
  const json& signal = root["signal"];
  swstab::SwitchingSignal sig;
  sig.modes = require_int_array(require_field(signal, "signal", "modes"), "signal.modes");
  sig.durations =
      require_number_array(require_field(signal, "signal", "durations"), "signal.durations");
  if (sig.modes.size() != sig.durations.size()) {
    schema_error("signal.durations", "expected one duration per mode");
  }
  for (size_t i = 0; i < sig.durations.size(); ++i) {
    if (!(sig.durations[i] > 0.0)) {
      schema_error("signal.durations[" + std::to_string(i) + "]", "durations must be positive");
    }
  }
  for (size_t i = 0; i < sig.modes.size(); ++i) {
    if (sig.modes[i] < 1 || sig.modes[i] > cfg.k) {
      schema_error("signal.modes[" + std::to_string(i) + "]",
                   "mode indices are 1-based and must lie in [1, graph.k]");
    }
  }
  cfg.signal = std::move(sig);
}

double positive_param(const json& params, const std::string& path, const std::string& key) {
  const double value = require_number(require_field(params, path, key), path + "." + key);
  if (!(value > 0.0)) schema_error(path + "." + key, "class parameters must be positive");
  return value;
}

std::vector<double> positive_param_array(const json& params, const std::string& path,
                                         const std::string& key) {
  const std::string full = path + "." + key;
  auto values = require_number_array(require_field(params, path, key), full);
  for (size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0)) {
      schema_error(full + "[" + std::to_string(i) + "]", "class parameters must be positive");
    }
  }
  if (values.empty()) schema_error(full, "expected at least one entry");
  return values;
}

void parse_class(const json& root, ProblemConfig& cfg) {
  if (!root.contains("class")) return;
  const json& cls = root["class"];
  const json& variant_node = require_field(cls, "class", "variant");
  if (!variant_node.is_string()) schema_error("class.variant", "expected a string");
  const std::string variant = variant_node.get<std::string>();
  const json& params = require_field(cls, "class", "params");
  if (variant == "dwell") {
    cfg.class_spec = swstab::DwellSpec{positive_param(params, "class.params", "tau")};
  } else if (variant == "simple-loop-dwell") {
    cfg.class_spec =
        swstab::SimpleLoopDwellSpec{positive_param_array(params, "class.params", "tau")};
  } else if (variant == "dwell-flee") {
    cfg.class_spec = swstab::DwellFleeSpec{positive_param(params, "class.params", "tau"),
                                           positive_param(params, "class.params", "eta")};
  } else if (variant == "loopwise-dwell-flee") {
    swstab::LoopwiseDwellFleeSpec spec{positive_param_array(params, "class.params", "tau"),
                                       positive_param_array(params, "class.params", "eta")};
    if (spec.tau.size() != spec.eta.size()) {
      schema_error("class.params.eta", "expected one eta per tau");
    }
    cfg.class_spec = std::move(spec);
  } else {
    schema_error("class.variant",
                 "unknown variant '" + variant +
                     "' (expected dwell, simple-loop-dwell, dwell-flee, loopwise-dwell-flee)");
  }
}

void parse_tolerances(const json& root, ProblemConfig& cfg) {
  if (!root.contains("tolerances")) return;
  const json& tol = root["tolerances"];
  if (!tol.is_object()) schema_error("tolerances", "expected an object");
  const auto grab = [&](const char* key, double& target) {
    if (!tol.contains(key)) return;
    const std::string path = std::string("tolerances.") + key;
    target = require_number(tol[key], path);
    if (!(target > 0.0)) schema_error(path, "tolerances must be positive");
  };
  grab("imag_axis_rel", cfg.tolerances.imag_axis_rel);
  grab("defect_cond_threshold", cfg.tolerances.defect_cond_threshold);
  grab("defective_margin", cfg.tolerances.defective_margin);
  grab("commuting_tol", cfg.tolerances.commuting_tol);
}

void parse_aggregate_loops(const json& root, ProblemConfig& cfg) {
  if (!root.contains("aggregate_loops")) return;
  const json& loops = root["aggregate_loops"];
  if (!loops.is_array()) schema_error("aggregate_loops", "expected an array");
  for (size_t i = 0; i < loops.size(); ++i) {
    const std::string path = "aggregate_loops[" + std::to_string(i) + "]";
    swstab::PromisedLoop pl;
    pl.walk = require_int_array(require_field(loops[i], path, "walk"), path + ".walk");
    for (size_t j = 0; j < pl.walk.size(); ++j) {
      if (pl.walk[j] < 1 || pl.walk[j] > cfg.k) {
        schema_error(path + ".walk[" + std::to_string(j) + "]",
                     "vertex indices are 1-based and must lie in [1, graph.k]");
      }
    }
    pl.promised_time =
        require_number(require_field(loops[i], path, "promised_time"), path + ".promised_time");
    if (!(pl.promised_time > 0.0)) {
      schema_error(path + ".promised_time", "promised times must be positive");
    }
    cfg.aggregate_loops.push_back(std::move(pl));
  }
}

void parse_scalars(const json& root, ProblemConfig& cfg) {
  if (root.contains("partition")) {
    const json& part = root["partition"];
    const int stable =
        require_int(require_field(part, "partition", "stable_count"), "partition.stable_count");
    if (stable < 1 || stable >= cfg.k) {
      schema_error("partition.stable_count", "must lie in [1, graph.k - 1]");
    }
    cfg.partition_override = swstab::Partition{stable};
  }
  if (root.contains("seed")) {
    const json& node = root["seed"];
    if (!node.is_number_unsigned() && !node.is_number_integer()) {
      schema_error("seed", "expected a non-negative integer");
    }
    if (node.is_number_integer() && node.get<long long>() < 0) {
      schema_error("seed", "expected a non-negative integer");
    }
    cfg.seed = node.get<std::uint64_t>();
  }
  if (root.contains("constants")) {
    const json& constants = root["constants"];
    if (!constants.is_object()) schema_error("constants", "expected an object of numbers");
    for (const auto& [key, value] : constants.items()) {
      cfg.constants[key] = require_number(value, "constants." + key);
    }
  }
  if (root.contains("zeta")) {
    cfg.zeta = require_number(root["zeta"], "zeta");
    if (!(cfg.zeta > 0.0) || !(cfg.zeta < 1.0)) {
      schema_error("zeta", "must lie strictly between 0 and 1");
    }
  }
  if (root.contains("horizon")) {
    cfg.horizon = require_int(root["horizon"], "horizon");
    if (cfg.horizon < 1) schema_error("horizon", "must be at least 1");
  }
  if (root.contains("trials")) {
    cfg.trials = require_int(root["trials"], "trials");
    if (cfg.trials < 1) schema_error("trials", "must be at least 1");
  }
  if (root.contains("synth_length")) {
    cfg.synth_length = require_int(root["synth_length"], "synth_length");
    if (cfg.synth_length < 1) schema_error("synth_length", "must be at least 1");
  }
  if (root.contains("x0")) {
    cfg.x0 = require_number_array(root["x0"], "x0");
    if (cfg.x0->empty()) schema_error("x0", "expected at least one coordinate");
  }
  if (root.contains("samples_per_interval")) {
    cfg.samples_per_interval = require_int(root["samples_per_interval"], "samples_per_interval");
    if (cfg.samples_per_interval < 1) schema_error("samples_per_interval", "must be at least 1");
  }
}

}  // namespace

ProblemConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    schema_error("(document)", e.what());
  }
  if (!root.is_object()) schema_error("(document)", "expected a JSON object");

  ProblemConfig cfg;
  parse_graph(root, cfg);
  parse_systems(root, cfg);
  parse_signal(root, cfg);
  parse_class(root, cfg);
  parse_tolerances(root, cfg);
  parse_aggregate_loops(root, cfg);
  parse_scalars(root, cfg);
  return cfg;
}

swstab::Digraph build_graph(const ProblemConfig& cfg) {
  return swstab::Digraph(cfg.k, cfg.edges);
}

swstab::Ensemble build_ensemble(const ProblemConfig& cfg) {
  std::vector<swstab::SubsystemSpectrum> spectra;
  spectra.reserve(cfg.systems.size());
  for (size_t i = 0; i < cfg.systems.size(); ++i) {
    const SystemConfig& sys = cfg.systems[i];
    Eigen::MatrixXd A(sys.n, sys.n);
    for (int r = 0; r < sys.n; ++r) {
      for (int c = 0; c < sys.n; ++c) {
        A(r, c) = sys.values[static_cast<size_t>(r) * static_cast<size_t>(sys.n) +
                             static_cast<size_t>(c)];
      }
    }
    swstab::SubsystemSpectrum spectrum = swstab::eigendecompose(A, cfg.tolerances);
    if (sys.override_basis) {
      Eigen::MatrixXcd P(sys.n, sys.n);
      for (int r = 0; r < sys.n; ++r) {
        for (int c = 0; c < sys.n; ++c) {
          P(r, c) = (*sys.override_basis)[static_cast<size_t>(r) * static_cast<size_t>(sys.n) +
                                          static_cast<size_t>(c)];
        }
      }
      spectrum.override_P = std::move(P);
    }
    spectra.push_back(std::move(spectrum));
  }
  return swstab::Ensemble(std::move(spectra));
}

std::optional<swstab::Partition> resolve_partition(const ProblemConfig& cfg,
                                                   const swstab::Ensemble& ens) {
  const auto derived = ens.derived_partition();
  if (cfg.partition_override) {
    if (!derived || derived->stable_count != cfg.partition_override->stable_count) {
      swstab::throw_input(
          "PartitionMismatch",
          "partition.stable_count does not match the eigenvalue-derived classification");
    }
  }
  return derived;
}

}  // namespace swstab_cli
