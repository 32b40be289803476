#pragma once

// Conjugate Gaussian posterior for M = A f + eps W, the Tikhonov (MAP) solver,
// marginal laws of linear functionals and credible sets.

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "bvm/forward.hpp"
#include "bvm/prior.hpp"
#include "bvm/spectral.hpp"

namespace bvm {

struct Observation {
  CoeffVector data;
  double epsilon = 0.0;
  std::optional<CoeffVector> truth;
  std::uint64_t noise_seed = 0;
};

/// M = A f_dagger + eps w with w = standard_normal_vector(n, noise_seed).
[[nodiscard]] Observation simulate_observation(const ForwardOperator& op, const CoeffVector& f_dagger, double epsilon,
                                               std::uint64_t noise_seed);
/// Observation from given data (no truth attached).
[[nodiscard]] Observation make_observation(CoeffVector data, double epsilon);

/// Posterior covariance plus a square-root factor for sampling. Shared
/// between all posteriors built from one (prior, operator, eps).
class PosteriorCovariance {
 public:
  static std::shared_ptr<const PosteriorCovariance> diagonal(Eigen::VectorXd variances);
  /// Symmetrises, floors eigenvalues at 0 when the negative defect is within
  /// 1e-10 trace, throws NumericalError otherwise.
  static std::shared_ptr<const PosteriorCovariance> dense(const Eigen::MatrixXd& cov);

  [[nodiscard]] bool is_diagonal() const noexcept { return diagonal_; }
  [[nodiscard]] const Eigen::VectorXd& variances() const;
  [[nodiscard]] const Eigen::MatrixXd& matrix() const;
  /// psi^T C psi.
  [[nodiscard]] double quadratic_form(const Eigen::VectorXd& psi) const;
  /// Returns S z with S S^T = C.
  [[nodiscard]] Eigen::VectorXd transform(const Eigen::VectorXd& z) const;
  [[nodiscard]] Eigen::MatrixXd to_dense() const;

 private:
  bool diagonal_ = true;
  Eigen::VectorXd variances_;
  Eigen::MatrixXd matrix_;
  Eigen::MatrixXd factor_;
};

class PosteriorGaussian {
 public:
  PosteriorGaussian(CoeffVector mean, std::shared_ptr<const PosteriorCovariance> covariance, double epsilon);

  [[nodiscard]] const CoeffVector& mean() const noexcept { return mean_; }
  [[nodiscard]] const PosteriorCovariance& covariance() const noexcept { return *covariance_; }
  [[nodiscard]] double epsilon() const noexcept { return epsilon_; }

 private:
  CoeffVector mean_;
  std::shared_ptr<const PosteriorCovariance> covariance_;
  double epsilon_;
};

/// The data-independent part of the conjugate update for fixed (prior, A, eps):
/// gain K = Sigma A^T (A Sigma A^T + eps^2 I)^{-1} and the posterior covariance.
/// Applying it to an observation only costs a matrix-vector product.
class ConjugateUpdate {
 public:
  ConjugateUpdate(const GaussianPrior& prior, const ForwardOperator& op, double epsilon);

  [[nodiscard]] PosteriorGaussian operator()(const Observation& obs) const;
  [[nodiscard]] double epsilon() const noexcept { return epsilon_; }
  [[nodiscard]] const std::shared_ptr<const PosteriorCovariance>& covariance() const noexcept { return covariance_; }

 private:
  BasisPtr basis_;
  double epsilon_;
  bool diagonal_;
  Eigen::VectorXd diag_gain_;
  Eigen::MatrixXd gain_;
  std::shared_ptr<const PosteriorCovariance> covariance_;
};

[[nodiscard]] PosteriorGaussian posterior_update(const GaussianPrior& prior, const ForwardOperator& op,
                                                 const Observation& obs);

/// Minimiser of the Onsager-Machlup functional
///   -<M, A f>/eps^2 + ||A f||^2 / (2 eps^2) + ||f||_RKHS^2 / 2
/// via the normal equations (A^T A / eps^2 + Sigma^{-1}) f = A^T M / eps^2.
[[nodiscard]] CoeffVector tikhonov_solve(const GaussianPrior& prior, const ForwardOperator& op,
                                         const Observation& obs);

/// Value of the Onsager-Machlup functional at f.
[[nodiscard]] double onsager_machlup(const GaussianPrior& prior, const ForwardOperator& op, const Observation& obs,
                                     const CoeffVector& f);

struct FunctionalMarginal {
  double mean = 0.0;
  double variance = 0.0;
};

[[nodiscard]] FunctionalMarginal functional_marginal(const PosteriorGaussian& post, const CoeffVector& psi);

struct CredibleInterval {
  double center = 0.0;
  double radius = 0.0;
};

/// Symmetric interval of exact posterior mass `level` for <f, psi>.
[[nodiscard]] CredibleInterval credible_interval(const PosteriorGaussian& post, const CoeffVector& psi, double level);

[[nodiscard]] CoeffVector posterior_sample(const PosteriorGaussian& post, std::uint64_t seed);

/// Empirical level-quantile ("higher" convention) of dual_norm(draw - mean, beta)
/// over n_draws posterior draws taken from one engine seeded with `seed`.
[[nodiscard]] double credible_ball_radius(const PosteriorGaussian& post, double beta, double level,
                                          std::size_t n_draws, std::uint64_t seed);

/// The sorted draw norms behind credible_ball_radius.
[[nodiscard]] std::vector<double> credible_ball_norms(const PosteriorGaussian& post, double beta,
                                                      std::size_t n_draws, std::uint64_t seed);

/// "higher" empirical quantile of sorted data: element ceil(level (n-1)).
[[nodiscard]] double higher_quantile(const std::vector<double>& sorted, double level);

}  // namespace bvm
