#pragma once

// Experiment orchestration behind the command-line tool.

#include <iosfwd>
#include <optional>

#include "bvm/config.hpp"
#include "bvm/csv.hpp"
#include "bvm/forward.hpp"
#include "bvm/harness.hpp"
#include "bvm/prior.hpp"
#include "bvm/spectral.hpp"

namespace bvm {

struct ExperimentSetup {
  BasisPtr basis;
  GaussianPrior prior;
  ForwardOperator op;
  CoeffVector truth;
};

/// Basis, prior, forward operator and truth described by the config.
[[nodiscard]] ExperimentSetup build_setup(const ExperimentConfig& cfg);

/// Test functional of the config for the given operator.
[[nodiscard]] TestFunctional build_functional(const ExperimentConfig& cfg, const ForwardOperator& op);

/// The smooth cutoff used for `truth.kind = bump`.
[[nodiscard]] BumpCutoff truth_cutoff();

/// Runs the configured experiment and returns its table (metadata included).
[[nodiscard]] CsvTable run_experiment(const ExperimentConfig& cfg, int workers);

/// Runs and writes cfg.output_path. Returns 0 on success, otherwise the error
/// category code after printing a one-line diagnostic to `diag`.
int run_command(const ExperimentConfig& cfg, int workers, std::ostream& diag);

/// Exit code for the exception currently being handled.
int exit_code_for_current_exception(std::ostream& diag);

}  // namespace bvm
