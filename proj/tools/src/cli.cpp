#include <ostream>

#include <CLI11.hpp>

#include "homeostat/cli/commands.hpp"

namespace homeostat::cli {

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"homeostat: homeostasis analysis of open semi-Markov reaction networks"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  };

  auto* validate = app.add_subcommand("validate", "Check a config and print class parameters");
  add_common(validate);

  auto* run = app.add_subcommand("run", "Run the requested engines and write traces and reports");
  add_common(run);
  run->add_option("--out", opt.out, "Output directory (overrides the config)");
  run->add_option("--seed", opt.seed, "Master seed (overrides the config)");
  run->add_option("--engines", opt.engines, "Comma-separated engines: analytic,simulate,kinetics,spectrum");
  run->add_option("--threads", opt.threads, "Worker threads, 0 = auto; outputs do not depend on it");

  auto* sweep = app.add_subcommand("sweep", "Depth sweep over a chain template");
  add_common(sweep);
  sweep->add_option("--out", opt.out, "Output directory (overrides the config)");
  sweep->add_option("--depths", opt.depths, "Depth range first:last");

  auto* compare = app.add_subcommand("compare", "Agreement statistics between two trace CSVs");
  compare->add_option("--reference", opt.reference, "Reference trace CSV")->required()->check(CLI::ExistingFile);
  compare->add_option("--candidate", opt.candidate, "Candidate trace CSV")->required()->check(CLI::ExistingFile);
  compare->add_option("--se", opt.candidate_se, "Candidate standard-error CSV")->check(CLI::ExistingFile);
  compare->add_option("--k", opt.k, "Standard errors allowed per cell");
  compare->add_option("--fraction", opt.fraction, "Required fraction of cells within k SE");
  compare->add_option("--rel-tol", opt.relative_tolerance, "Peak-relative tolerance when no SE file is given");
  compare->add_option("--out", opt.out, "Directory for compare.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalidConfig;
  }

  if (*validate) return cmd_validate(opt, out, err);
  if (*run) return cmd_run(opt, out, err);
  if (*sweep) return cmd_sweep(opt, out, err);
  return cmd_compare(opt, out, err);
}

}  // namespace homeostat::cli
