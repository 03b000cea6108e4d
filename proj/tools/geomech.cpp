#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "geomech/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"geomech: geometric mechanics on a single chart"};
  app.require_subcommand(1);

  std::string scenario;
  std::string out;
  std::string suite;
  std::string mode;
  geomech::cli::Options options;
  int codiff_sign = 0;

  auto* simulate = app.add_subcommand("simulate", "integrate the scenario and write a trajectory CSV");
  simulate->add_option("scenario", scenario, "scenario file")->required();
  simulate->add_option("--out", out, "CSV path, '-' for stdout")->default_val("-");

  auto* check = app.add_subcommand("check", "run a check suite and write a JSON report");
  check->add_option("scenario", scenario, "scenario file")->required();
  check->add_option("--suite", suite, "newton, recover-force, time-constraint, reduce, relativistic, maxwell, "
                                      "waves or noether")
      ->required();
  check->add_option("--out", out, "report path, '-' for stdout")->default_val("-");
  check->add_option("--seed", options.seed, "seed of the quasi-random sample stream")->default_val(1);
  check->add_option("--codiff-sign", codiff_sign, "sign convention of the codifferential (+1 or -1)")
      ->check(CLI::IsMember({-1, 1}));

  auto* reduce = app.add_subcommand("reduce", "reduce a block metric to a conservative system");
  reduce->add_option("scenario", scenario, "scenario file")->required();
  reduce->add_option("--mode", mode, "project or constrain")->required()->check(CLI::IsMember({"project", "constrain"}));
  reduce->add_option("--out", out, "JSON path, '-' for stdout")->default_val("-");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : geomech::cli::kConfig;
  }

  if (codiff_sign != 0) options.codiff_sign = codiff_sign;

  if (*simulate) return geomech::cli::cmd_simulate(scenario, out);
  if (*check) return geomech::cli::cmd_check(scenario, suite, out, options);
  return geomech::cli::cmd_reduce(scenario, mode, out);
}
