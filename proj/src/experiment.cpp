#include "bvm/experiment.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "bvm/error.hpp"
#include "bvm/posterior.hpp"
#include "bvm/random.hpp"
#include "bvm/stats.hpp"

namespace bvm {

namespace {

ForwardOperator build_operator(const ExperimentConfig& cfg, const BasisPtr& basis) {
  switch (cfg.op) {
    case OperatorKind::Psido: return psido_multiplier(basis, cfg.op_t);
    case OperatorKind::Heat: return heat_semigroup(basis, cfg.op_T);
    case OperatorKind::Bvp: break;
  }
  const std::string& s = cfg.op_coefficient;
  if (s.rfind("sin:", 0) == 0) {
    double a0 = 0.0, a1 = 0.0;
    int freq = 0;
    char c1 = 0, c2 = 0;
    std::istringstream in(s.substr(4));
    if (!(in >> a0 >> c1 >> a1 >> c2 >> freq) || c1 != ',' || c2 != ',')
      throw ConfigError("config key 'operator.coefficient': expected 'sin:a0,a1,freq'");
    return elliptic_operator(EllipticCoefficient::sinusoidal(a0, a1, freq), basis).L_inv;
  }
  return elliptic_operator(EllipticCoefficient::constant(std::stod(s)), basis).L_inv;
}

CoeffVector build_truth(const ExperimentConfig& cfg, const BasisPtr& basis) {
  switch (cfg.truth) {
    case TruthKind::Sobolev: return sobolev_random_draw(basis, cfg.truth_alpha, cfg.truth_seed);
    case TruthKind::Bump: {
      const CoeffVector draw = sobolev_random_draw(basis, cfg.truth_alpha, cfg.truth_seed);
      return multiply_on_grid(truth_cutoff(), synthesize_on_grid(draw), basis);
    }
    case TruthKind::Modes: {
      Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis->n_modes()));
      for (const auto& [m, v] : cfg.truth_modes) c[static_cast<Eigen::Index>(m - 1)] = v;
      return CoeffVector(basis, std::move(c));
    }
  }
  throw ConfigError("unknown truth kind");
}

void add_common_metadata(CsvTable& table, const ExperimentConfig& cfg, const ExperimentSetup& setup) {
  table.metadata = resolved_entries(cfg);
  table.metadata.emplace_back("tail_bound", format_double(setup.prior.tail_bound()));
  table.metadata.emplace_back("calibrated_c",
                              format_double(smoothing_constant(setup.op, cfg.resolved_ambient_exponent())));
}

std::string opt_double(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }
std::string opt_bool(const std::optional<bool>& v) { return v ? format_bool(*v) : std::string(); }

CsvTable coverage_table(const ExperimentConfig& cfg, const ExperimentSetup& setup, int workers) {
  const TestFunctional tf = build_functional(cfg, setup.op);
  CsvTable table;
  add_common_metadata(table, cfg, setup);
  table.metadata.emplace_back("limiting_variance", format_double(tf.limiting_variance));
  table.header = {"epsilon", "replicate",   "functional_mean", "scaled_error", "hat_psi",
                  "radius",  "covered",     "ball_radius",     "ball_covered"};
  for (std::size_t e = 0; e < cfg.epsilons.size(); ++e) {
    ReplicateConfig rc;
    rc.epsilon = cfg.epsilons[e];
    rc.n_replicates = cfg.n_replicates;
    rc.level = cfg.level;
    rc.ball_beta = cfg.ball_beta;
    rc.ball_draws = cfg.ball_draws;
    rc.master_seed = cfg.master_seed;
    const std::vector<ReplicateResult> results =
        run_replicates(setup.prior, setup.op, setup.truth, std::span(&tf, 1), rc, workers);
    for (const ReplicateResult& r : results)
      table.rows.push_back({format_double(r.epsilon), std::to_string(r.replicate_index),
                            format_double(r.functional_mean), format_double(r.scaled_error),
                            format_double(r.hat_psi), format_double(r.interval_radius),
                            format_bool(r.interval_covered), opt_double(r.ball_radius), opt_bool(r.ball_covered)});
    const CoverageReport rep = coverage_report(results, CoverageKind::Interval, cfg.level);
    std::ostringstream os;
    os << "epsilon=" << format_double(rc.epsilon) << " hit_rate=" << format_double(rep.hit_rate)
       << " wilson_low=" << format_double(rep.wilson_low) << " wilson_high=" << format_double(rep.wilson_high)
       << " mean_scaled_radius=" << format_double(rep.mean_scaled_radius)
       << " ks=" << format_double(rep.ks_to_limit);
    if (cfg.ball_beta)
      os << " ball_hit_rate=" << format_double(coverage_report(results, CoverageKind::Ball, cfg.level).hit_rate);
    table.metadata.emplace_back("summary." + std::to_string(e), os.str());
  }
  return table;
}

CsvTable rates_table(const ExperimentConfig& cfg, const ExperimentSetup& setup, int workers) {
  const double t = cfg.op == OperatorKind::Psido ? cfg.op_t : 2.0;
  const RatePrediction pred = predict_rate(t, cfg.prior_r, cfg.truth_alpha, 1);
  CsvTable table;
  add_common_metadata(table, cfg, setup);
  table.header = {"epsilon", "rms_error", "mean_error"};
  std::vector<double> rms;
  for (double eps : cfg.epsilons) {
    const std::vector<double> err = posterior_mean_errors(setup.prior, setup.op, setup.truth, eps, cfg.n_replicates,
                                                          cfg.rates_norm_exponent, cfg.master_seed, workers);
    double ss = 0.0;
    double s = 0.0;
    for (double x : err) {
      ss += x * x;
      s += x;
    }
    const double n = static_cast<double>(err.size());
    rms.push_back(std::sqrt(ss / n));
    table.rows.push_back({format_double(eps), format_double(rms.back()), format_double(s / n)});
  }
  const RateFit fit = rate_fit(cfg.epsilons, rms, pred.exponent);
  table.metadata.emplace_back("fit.slope", format_double(fit.slope));
  table.metadata.emplace_back("fit.intercept", format_double(fit.intercept));
  table.metadata.emplace_back("fit.r_squared", format_double(fit.r_squared));
  table.metadata.emplace_back("fit.predicted_exponent", format_double(pred.exponent));
  table.metadata.emplace_back("fit.regime",
                              pred.which == RateRegime::ApproxLimited ? "ApproxLimited" : "SmallBallLimited");
  return table;
}

CsvTable tightness_table(const ExperimentConfig& cfg, const ExperimentSetup& setup) {
  const ForwardOperator* L = setup.op.differential_operator();
  if (!L) throw ConfigError("tightness: operator has no differential operator attached");
  CsvTable table;
  add_common_metadata(table, cfg, setup);
  table.header = {"beta", "J", "summand", "partial_sum"};
  for (double beta : cfg.tightness_betas) {
    const TightnessSeries series = tightness_series(*L, beta, cfg.n_modes);
    for (std::size_t j = 0; j < series.partial_sums.size(); ++j)
      table.rows.push_back({format_double(beta), std::to_string(j + 1), format_double(series.summands[j]),
                            format_double(series.partial_sums[j])});
    table.metadata.emplace_back("verdict." + format_double(beta), to_string(series.verdict));
  }
  return table;
}

CsvTable concentration_table(const ExperimentConfig& cfg, const ExperimentSetup& setup, int workers) {
  const double s = cfg.resolved_ambient_exponent();
  CsvTable table;
  add_common_metadata(table, cfg, setup);
  table.header = {"delta", "approx_term", "smallball_term", "phi", "hits", "samples"};
  for (std::size_t i = 0; i < cfg.concentration_deltas.size(); ++i) {
    const double delta = cfg.concentration_deltas[i];
    const ApproximationSolution approx = rkhs_approximation(setup.prior, setup.truth, delta, s);
    const SmallBallEstimate sb = small_ball_logprob(setup.prior, s, delta, cfg.concentration_mc_samples,
                                                    derive_seed(cfg.master_seed, i), workers);
    table.rows.push_back({format_double(delta), format_double(approx.value), format_double(-sb.log_prob),
                          format_double(approx.value - sb.log_prob), std::to_string(sb.hits),
                          std::to_string(sb.samples)});
  }
  return table;
}

CsvTable conjugacy_table(const ExperimentConfig& cfg, const ExperimentSetup& setup) {
  CsvTable table;
  add_common_metadata(table, cfg, setup);
  table.header = {"trial", "epsilon", "relative_residual"};
  double worst = 0.0;
  for (std::size_t i = 0; i < cfg.conjugacy_trials; ++i) {
    const std::uint64_t root = derive_seed(cfg.master_seed, i);
    const double eps = cfg.epsilons[i % cfg.epsilons.size()];
    const CoeffVector f = sample_prior(setup.prior, derive_seed(root, 0));
    const Observation obs = simulate_observation(setup.op, f, eps, derive_seed(root, 1));
    const CoeffVector mean = posterior_update(setup.prior, setup.op, obs).mean();
    const CoeffVector map = tikhonov_solve(setup.prior, setup.op, obs);
    const double scale = std::max(mean.coeffs().norm(), map.coeffs().norm());
    const double residual = scale == 0.0 ? 0.0 : (mean.coeffs() - map.coeffs()).norm() / scale;
    worst = std::max(worst, residual);
    table.rows.push_back({std::to_string(i), format_double(eps), format_double(residual)});
  }
  table.metadata.emplace_back("max_relative_residual", format_double(worst));
  if (worst > 1e-8) {
    std::ostringstream os;
    os << "conjugacy: Tikhonov and posterior mean differ by " << worst << " (> 1e-8)";
    throw NumericalError(os.str());
  }
  return table;
}

}  // namespace

BumpCutoff truth_cutoff() { return make_bump({0.1, 0.9}, {0.2, 0.8}); }

ExperimentSetup build_setup(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const BasisKind kind = cfg.op == OperatorKind::Psido ? BasisKind::FourierTorus : BasisKind::DirichletSine;
  BasisPtr basis = build_basis(kind, cfg.n_modes, cfg.oversample);
  GaussianPrior prior = matern_prior(basis, cfg.prior_r, cfg.prior_amplitude);
  ForwardOperator op = build_operator(cfg, basis);
  CoeffVector truth = build_truth(cfg, basis);
  return {std::move(basis), std::move(prior), std::move(op), std::move(truth)};
}

TestFunctional build_functional(const ExperimentConfig& cfg, const ForwardOperator& op) {
  const BasisPtr& basis = op.basis_ptr();
  switch (cfg.functional) {
    case FunctionalKind::Bump:
      return representer(op, bump_functional(basis, cfg.functional_support, cfg.functional_plateau,
                                             cfg.functional_frequency, cfg.functional_band));
    case FunctionalKind::Mode: return representer(op, CoeffVector::unit(basis, cfg.functional_mode - 1));
    case FunctionalKind::Representer: {
      const CoeffVector psi_tilde = CoeffVector::unit(basis, cfg.functional_mode - 1);
      if (cfg.op == OperatorKind::Heat) return heat_psi_from_representer(psi_tilde, cfg.op_T);
      const CoeffVector a_psi_tilde = apply(op, psi_tilde);
      return {-1.0 * adjoint_apply(op, a_psi_tilde), psi_tilde, inner(a_psi_tilde, a_psi_tilde),
              FunctionalConstruction::FromRepresenter};
    }
  }
  throw ConfigError("unknown functional kind");
}

CsvTable run_experiment(const ExperimentConfig& cfg, int workers) {
  const ExperimentSetup setup = build_setup(cfg);
  switch (cfg.experiment) {
    case ExperimentKind::Coverage: return coverage_table(cfg, setup, workers);
    case ExperimentKind::Rates: return rates_table(cfg, setup, workers);
    case ExperimentKind::Tightness: return tightness_table(cfg, setup);
    case ExperimentKind::Concentration: return concentration_table(cfg, setup, workers);
    case ExperimentKind::Conjugacy: return conjugacy_table(cfg, setup);
  }
  throw ConfigError("unknown experiment");
}

int exit_code_for_current_exception(std::ostream& diag) {
  try {
    throw;
  } catch (const Error& e) {
    diag << "error: " << e.what() << '\n';
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    diag << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorCategory::Numerical);
  }
}

int run_command(const ExperimentConfig& cfg, int workers, std::ostream& diag) {
  try {
    emit_csv(run_experiment(cfg, workers), cfg.output_path);
    return 0;
  } catch (...) {
    return exit_code_for_current_exception(diag);
  }
}

}  // namespace bvm
