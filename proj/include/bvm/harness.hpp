#pragma once

// Bernstein-von Mises experiment machinery: representers and limiting
// variances, the frequentist replicate engine, distribution distances,
// coverage reports, rate fits and the tightness series of the limit process.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bvm/forward.hpp"
#include "bvm/posterior.hpp"
#include "bvm/prior.hpp"
#include "bvm/spectral.hpp"

namespace bvm {

enum class FunctionalConstruction { FromPsi, FromRepresenter };

/// A test function psi with its representer psi_tilde (psi = -A*A psi_tilde)
/// and the limiting variance ||A psi_tilde||^2.
struct TestFunctional {
  CoeffVector psi;
  CoeffVector psi_tilde;
  double limiting_variance = 0.0;
  FunctionalConstruction construction = FunctionalConstruction::FromPsi;
};

/// psi_tilde = -(A*A)^{-1} psi. For the elliptic solution operator the closed
/// form -L(L psi) is computed as well and the two must agree to 1e-8.
[[nodiscard]] TestFunctional representer(const ForwardOperator& op, const CoeffVector& psi,
                                         double cond_limit = kDefaultCondLimit);

/// Heat semigroup at time T: psi_j = -exp(-2 lambda_j T) psi_tilde_j. Requires
/// 2 lambda_j T <= 300 on every occupied mode.
[[nodiscard]] TestFunctional heat_psi_from_representer(const CoeffVector& psi_tilde, double T);

/// Bump-times-sine test function projected onto its first `band` modes.
[[nodiscard]] CoeffVector bump_functional(const BasisPtr& basis, Interval support, Interval plateau, int frequency,
                                          std::size_t band);

struct ReplicateResult {
  std::size_t replicate_index = 0;
  std::size_t functional_index = 0;
  double epsilon = 0.0;
  double functional_mean = 0.0;     ///< <f_bar, psi>
  double scaled_error = 0.0;        ///< (<f_bar, psi> - <f_dagger, psi>) / eps
  double hat_psi = 0.0;             ///< <f_dagger, psi> - eps <A psi_tilde, w>
  double truth_functional = 0.0;    ///< <f_dagger, psi>
  double interval_radius = 0.0;
  bool interval_covered = false;
  std::optional<double> ball_radius;
  std::optional<bool> ball_covered;
  double posterior_functional_variance = 0.0;
  double limiting_variance = 0.0;
};

struct ReplicateConfig {
  double epsilon = 0.0;
  std::size_t n_replicates = 0;
  double level = 0.95;
  std::optional<double> ball_beta;
  std::size_t ball_draws = 1000;
  std::uint64_t master_seed = 0;
};

/// Per-replicate seeds: replicate i uses derive_seed(master, i) as its root;
/// the noise stream and the ball-draw stream are derived from that root.
[[nodiscard]] std::uint64_t replicate_noise_seed(std::uint64_t master_seed, std::size_t replicate);
[[nodiscard]] std::uint64_t replicate_ball_seed(std::uint64_t master_seed, std::size_t replicate);

/// The replicate's white-noise coefficients.
[[nodiscard]] Eigen::VectorXd replicate_noise(std::size_t n_modes, std::uint64_t master_seed, std::size_t replicate);

/// Frequentist replicates under a fixed truth. Results are ordered by
/// (replicate, functional) and do not depend on the worker count.
[[nodiscard]] std::vector<ReplicateResult> run_replicates(const GaussianPrior& prior, const ForwardOperator& op,
                                                          const CoeffVector& f_dagger,
                                                          std::span<const TestFunctional> functionals,
                                                          const ReplicateConfig& config, int workers = 0);

/// Per-replicate Sobolev-norm (exponent `norm_exponent`) distance between the
/// posterior mean and f_dagger, on the same noise streams as run_replicates.
[[nodiscard]] std::vector<double> posterior_mean_errors(const GaussianPrior& prior, const ForwardOperator& op,
                                                        const CoeffVector& f_dagger, double epsilon,
                                                        std::size_t n_replicates, double norm_exponent,
                                                        std::uint64_t master_seed, int workers = 0);

/// One-sample Kolmogorov-Smirnov statistic against N(0, variance).
[[nodiscard]] double ks_distance(std::span<const double> samples, double variance);

/// Upper bound on the bounded-Lipschitz distance to N(0, variance):
/// min(2, W1) with W1 computed exactly on [-clip sigma, clip sigma].
[[nodiscard]] double bl_distance_upper(std::span<const double> samples, double variance, double clip = 8.0);

enum class CoverageKind { Interval, Ball };

struct CoverageReport {
  std::size_t n_replicates = 0;
  double hit_rate = 0.0;
  double wilson_low = 0.0;
  double wilson_high = 0.0;
  double mean_scaled_radius = 0.0;
  double ks_to_limit = 0.0;
  double target_level = 0.0;
};

[[nodiscard]] CoverageReport coverage_report(std::span<const ReplicateResult> results, CoverageKind which,
                                             double target_level = 0.95);

struct RateFit {
  std::vector<double> epsilons;
  std::vector<double> errors;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double predicted_exponent = 0.0;
};

[[nodiscard]] RateFit rate_fit(std::span<const double> epsilons, std::span<const double> errors,
                               double predicted_exponent);

enum class TightnessVerdict { Converges, Diverges, Boundary };

struct TightnessSeries {
  std::vector<double> partial_sums;  ///< S_J, J = 1..max_modes
  std::vector<double> summands;
  TightnessVerdict verdict = TightnessVerdict::Boundary;
};

/// S_J = sum_{j<=J} (1+lambda_j)^(-beta) ||L phi_j||^2, the second moment of
/// the limit process in the dual scale.
[[nodiscard]] TightnessSeries tightness_series(const ForwardOperator& op_L, double beta, std::size_t max_modes);

/// Truncated-SVD estimator with oracle truncation for one functional.
struct TruncatedSvdEstimator {
  std::size_t truncation = 0;
  double predicted_scaled_mse = 0.0;   ///< exact MSE at f_dagger
  double worst_case_scaled_mse = 0.0;  ///< sup over ||A h|| <= eps around f_dagger
  double scaled_variance = 0.0;
};

/// Chooses the truncation level minimising the local worst-case MSE of
/// eps^{-1}(<f_hat, psi> - <f, psi>) over f = f_dagger + h, ||A h|| <= eps.
/// Tuning to f_dagger alone can undercut the information bound at finite eps;
/// the local minimax risk cannot.
[[nodiscard]] TruncatedSvdEstimator oracle_tsvd(const ForwardOperator& op, const CoeffVector& f_dagger,
                                                const CoeffVector& psi, double epsilon);

/// Scaled errors of the TSVD estimator on the same noise streams as run_replicates.
[[nodiscard]] std::vector<double> tsvd_scaled_errors(const ForwardOperator& op, const CoeffVector& f_dagger,
                                                     const CoeffVector& psi, double epsilon, std::size_t truncation,
                                                     std::size_t n_replicates, std::uint64_t master_seed);

[[nodiscard]] const char* to_string(TightnessVerdict v) noexcept;

namespace serial {
[[nodiscard]] std::vector<ReplicateResult> run_replicates(const GaussianPrior& prior, const ForwardOperator& op,
                                                          const CoeffVector& f_dagger,
                                                          std::span<const TestFunctional> functionals,
                                                          const ReplicateConfig& config);
}

}  // namespace bvm
