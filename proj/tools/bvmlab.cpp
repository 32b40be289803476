// bvmlab: run or validate an experiment configuration.
//
//   bvmlab run coverage.cfg --workers 4 --out coverage.csv
//   bvmlab validate coverage.cfg

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bvm/config.hpp"
#include "bvm/experiment.hpp"

namespace {

struct Options {
  std::string config_path;
  int workers = 0;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
};

bvm::ExperimentConfig resolve(const Options& opt) {
  bvm::ExperimentConfig cfg = bvm::load_config(opt.config_path);
  if (opt.out) cfg.output_path = *opt.out;
  if (opt.seed) cfg.master_seed = *opt.seed;
  bvm::validate_config(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian linear inverse problem laboratory"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&opt](CLI::App* sub) {
    sub->add_option("config", opt.config_path, "Experiment configuration file")->required();
    sub->add_option("--workers", opt.workers, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", opt.out, "Output CSV path (overrides output_path)");
    sub->add_option("--seed", opt.seed, "Master seed (overrides master_seed)");
  };
  CLI::App* run = app.add_subcommand("run", "Run an experiment and write its CSV");
  CLI::App* validate = app.add_subcommand("validate", "Check a configuration and print it resolved");
  add_common(run);
  add_common(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const bvm::ExperimentConfig cfg = resolve(opt);
    if (validate->parsed()) {
      // Building the setup surfaces operator and functional errors too.
      const bvm::ExperimentSetup setup = bvm::build_setup(cfg);
      if (cfg.experiment == bvm::ExperimentKind::Coverage) (void)bvm::build_functional(cfg, setup.op);
      for (const auto& [k, v] : bvm::resolved_entries(cfg)) std::cout << k << " = " << v << '\n';
      return 0;
    }
    const int code = bvm::run_command(cfg, opt.workers, std::cerr);
    if (code == 0) std::cerr << "wrote " << cfg.output_path << '\n';
    return code;
  } catch (...) {
    return bvm::exit_code_for_current_exception(std::cerr);
  }
}
