// pmeas.cpp
// Command-line driver. Exit codes: 0 success, 1 violated internal
// invariant, 2 validation error.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pmeas/cli.hpp"

namespace {

void add_common_options(CLI::App* cmd, pmeas::cli::RunSpec& spec) {
  cmd->add_option("--p", spec.p, "measurement strength on |1>");
  cmd->add_option("--q", spec.q, "measurement strength on |0>");
  cmd->add_option("--p2", spec.p2, "second measurement strength (teleport)");
  cmd->add_option("--theta", spec.theta, "input Bloch polar angle");
  cmd->add_option("--phi", spec.phi, "input Bloch azimuthal angle");
  cmd->add_option("--ordering", spec.ordering, "alice-first | bob-first");
  cmd->add_option("--bob-measures", spec.bob_measures, "none | 0 | 1");
  cmd->add_option("--trajectories", spec.trajectories, "Monte Carlo trajectory count");
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&spec](const std::uint64_t& value) { spec.seed_flag = value; },
      "random seed (PMEAS_SEED is the fallback)");
  cmd->add_option("--format", spec.format, "json | csv");
  cmd->add_option("--out", spec.out_path, "output path (default: stdout)");
  cmd->add_option("--param", spec.sweep.param, "sweep parameter name");
  cmd->add_option("--start", spec.sweep.start, "sweep start value");
  cmd->add_option("--end", spec.sweep.end, "sweep end value");
  cmd->add_option("--steps", spec.sweep.steps, "sweep point count");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pmeas: partial-measurement quantum simulator"};
  app.require_subcommand(1);

  pmeas::cli::RunSpec spec;
  for (const char* name : {"epr", "teleport", "swap", "tomography", "hv", "chsh-sweep",
                           "identities"}) {
    CLI::App* cmd = app.add_subcommand(name);
    add_common_options(cmd, spec);
  }

  CLI11_PARSE(app, argc, argv);
  spec.subcommand = app.get_subcommands().front()->get_name();

  const std::vector<std::string> errors = pmeas::cli::validate(spec);
  if (!errors.empty()) {
    for (const std::string& error : errors) std::cerr << "error: " << error << "\n";
    return 2;
  }

  const pmeas::cli::RunResult result = pmeas::cli::run(spec);
  if (!result.human_lines.empty()) std::cerr << result.human_lines;
  if (result.exit_code == 1) {
    std::cerr << result.output;
    return 1;
  }
  if (spec.out_path.empty()) {
    std::cout << result.output;
  } else {
    std::ofstream out(spec.out_path, std::ios::binary);
    if (!out) {
      std::cerr << "error: cannot open output path " << spec.out_path << "\n";
      return 2;
    }
    out << result.output;
  }
  return result.exit_code;
}
