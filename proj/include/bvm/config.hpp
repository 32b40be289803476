#pragma once

// Experiment configuration: flat `key = value` text with dotted section
// prefixes (operator.t = 2). Lines starting with '#' are comments.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bvm/spectral.hpp"

namespace bvm {

enum class ExperimentKind { Coverage, Rates, Tightness, Concentration, Conjugacy };
enum class OperatorKind { Psido, Bvp, Heat };
enum class TruthKind { Sobolev, Bump, Modes };
enum class FunctionalKind { Bump, Mode, Representer };

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Coverage;

  OperatorKind op = OperatorKind::Bvp;
  double op_t = 2.0;                 ///< psido smoothing order
  std::string op_coefficient = "1";  ///< "c" or "sin:a0,a1,freq"
  double op_T = 0.1;                 ///< heat time

  double prior_r = 1.0;
  double prior_amplitude = 1.0;

  TruthKind truth = TruthKind::Bump;
  double truth_alpha = 2.0;
  std::uint64_t truth_seed = 0;
  std::vector<std::pair<std::size_t, double>> truth_modes;  ///< 1-based mode, value

  FunctionalKind functional = FunctionalKind::Bump;
  Interval functional_support{0.1, 0.9};
  Interval functional_plateau{0.3, 0.7};
  int functional_frequency = 1;
  std::size_t functional_band = 4;
  std::size_t functional_mode = 1;

  std::vector<double> epsilons{1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
  std::size_t n_replicates = 200;
  double level = 0.95;
  std::optional<double> ball_beta;
  std::size_t ball_draws = 1000;
  std::size_t n_modes = 256;
  std::size_t oversample = 8;
  std::uint64_t master_seed = 0;
  std::string output_path = "results.csv";

  std::optional<double> ambient_exponent;  ///< default: -2 (bvp, heat), -t (psido)
  double rates_norm_exponent = -2.0;
  std::vector<double> tightness_betas{2.0, 2.5, 3.5};
  std::vector<double> concentration_deltas{0.5, 0.35, 0.25, 0.18};
  std::size_t concentration_mc_samples = 100000;
  std::size_t conjugacy_trials = 50;

  [[nodiscard]] double resolved_ambient_exponent() const;
};

/// Parses and validates. Errors are ConfigError naming the offending key.
[[nodiscard]] ExperimentConfig parse_config(const std::string& text);
[[nodiscard]] ExperimentConfig load_config(const std::string& path);

/// Re-checks every constraint; parse_config calls this after applying values.
void validate_config(const ExperimentConfig& cfg);

/// The fully resolved configuration as ordered key/value pairs; feeding them
/// back through parse_config reproduces the same config.
[[nodiscard]] std::vector<std::pair<std::string, std::string>> resolved_entries(const ExperimentConfig& cfg);

[[nodiscard]] const char* to_string(ExperimentKind k) noexcept;
[[nodiscard]] const char* to_string(OperatorKind k) noexcept;

}  // namespace bvm
