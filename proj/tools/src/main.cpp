#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "swstab/errors.hpp"
#include "swstab_cli/config.hpp"
#include "swstab_cli/runner.hpp"

namespace {

struct CliOptions {
  std::string config_path;
  std::string output_path;
  std::string trace_path;
  bool quiet = false;
  swstab_cli::RunFlags flags;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    swstab::throw_input("SchemaError", "(file): cannot open '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    swstab::throw_input("SchemaError", "(file): cannot write '" + path + "'");
  }
  out << content;
}

/// Machine report to stdout or --output, human summary to stderr.
void emit(const CliOptions& opts, const swstab_cli::RunResult& result) {
  const std::string machine = result.report.dump(2) + "\n";
  if (opts.output_path.empty()) {
    std::cout << machine;
  } else {
    write_file(opts.output_path, machine);
  }
  if (!opts.trace_path.empty()) write_file(opts.trace_path, result.trace);
  if (!opts.quiet) std::cerr << result.human;
}

int run(const std::string& command, const CliOptions& opts) {
  try {
    const swstab_cli::ProblemConfig cfg = swstab_cli::parse_config(read_file(opts.config_path));
    const swstab_cli::RunResult result = swstab_cli::run_command(command, cfg, opts.flags);
    emit(opts, result);
    return result.exit_code;
  } catch (const swstab::Error& e) {
    const bool input = e.category() == swstab::ErrorCategory::InvalidInput;
    nlohmann::json report{{"error", nlohmann::json{{"category", input ? "input" : "numerical"},
                                                   {"code", e.code()},
                                                   {"message", e.what()}}}};
    const std::string machine = report.dump(2) + "\n";
    if (opts.output_path.empty()) {
      std::cout << machine;
    } else {
      write_file(opts.output_path, machine);
    }
    if (!opts.quiet) std::cerr << "error [" << e.code() << "]: " << e.what() << "\n";
    return input ? 2 : 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stability certification for graph-constrained switched linear systems"};
  app.require_subcommand(1);

  CliOptions opts;
  std::optional<int> horizon, trials, length, samples;
  std::optional<std::uint64_t> seed;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", opts.config_path, "JSON problem description")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("-o,--output", opts.output_path, "write the machine report to a file");
    sub->add_flag("-q,--quiet", opts.quiet, "suppress the human summary on stderr");
    sub->add_option("--seed", seed, "override the config seed");
    return sub;
  };

  add_common(app.add_subcommand("loops", "enumerate the simple loops of the graph"));
  add_common(app.add_subcommand("decompose",
                                "standard decomposition of the configured signal"));
  add_common(app.add_subcommand("bounds", "classical dwell-time bounds and graph constants"));

  CLI::App* certify = add_common(
      app.add_subcommand("certify", "evaluate one stability criterion"));
  certify->add_option("--criterion", opts.flags.criterion,
                      "simple-loop-dwell, loop-aggregate, ring-uniform, ring-loopwise, "
                      "bipartite, general-uniform, general-loopwise, switch-count, "
                      "acyclic-rescaled, commuting")
      ->required();
  certify->add_option("--horizon", horizon, "switch-count evaluation horizon");

  CLI::App* simulate = add_common(
      app.add_subcommand("simulate", "piecewise-exact simulation of the configured signal"));
  simulate->add_option("--trace", opts.trace_path, "write a CSV trace (t,mode,norm,x1..xn)");
  simulate->add_option("--samples", samples, "samples per interval in the trace");

  CLI::App* validate = add_common(
      app.add_subcommand("validate", "certify, then Monte Carlo check the certificate"));
  validate->add_option("--criterion", opts.flags.criterion, "criterion to certify and validate")
      ->required();
  validate->add_option("--trials", trials, "number of synthesized trial signals");
  validate->add_option("--horizon", horizon, "switches per trial signal");

  CLI::App* synth = add_common(
      app.add_subcommand("synth", "synthesize a random signal in the configured class"));
  synth->add_option("--length", length, "number of switching intervals");

  CLI11_PARSE(app, argc, argv);

  opts.flags.horizon = horizon;
  opts.flags.trials = trials;
  opts.flags.length = length;
  opts.flags.samples = samples;
  opts.flags.seed = seed;
  opts.flags.want_trace = !opts.trace_path.empty();

  const std::string command = app.get_subcommands().front()->get_name();
  return run(command, opts);
}
