#pragma once

// Matérn-type Gaussian priors on a spectral basis: sampling, RKHS norm,
// small-ball probabilities, concentration function and rate prediction.

#include <cstdint>

#include <Eigen/Core>

#include "bvm/spectral.hpp"

namespace bvm {

/// Centred Gaussian with independent coordinates, tau_j = amplitude (1+lambda_j)^(-r).
/// The RKHS is the Sobolev space H^r.
class GaussianPrior {
 public:
  GaussianPrior(BasisPtr basis, double r, double amplitude);

  [[nodiscard]] const BasisPtr& basis_ptr() const noexcept { return basis_; }
  [[nodiscard]] const SpectralBasis& basis() const noexcept { return *basis_; }
  [[nodiscard]] const Eigen::VectorXd& variances() const noexcept { return variances_; }
  [[nodiscard]] double rkhs_exponent() const noexcept { return r_; }
  [[nodiscard]] double amplitude() const noexcept { return amplitude_; }

  /// Prior mass discarded by truncation: sum_{j > n} tau_j (explicit sum plus
  /// an integral bound on the remainder).
  [[nodiscard]] double tail_bound() const;

 private:
  BasisPtr basis_;
  double r_;
  double amplitude_;
  Eigen::VectorXd variances_;
};

/// Throws ConfigError unless r > d/2 (d = 1) and amplitude > 0.
[[nodiscard]] GaussianPrior matern_prior(const BasisPtr& basis, double r, double amplitude = 1.0);

[[nodiscard]] CoeffVector sample_prior(const GaussianPrior& prior, std::uint64_t seed);

[[nodiscard]] double rkhs_norm(const GaussianPrior& prior, const CoeffVector& g);

struct SmallBallEstimate {
  double log_prob = 0.0;
  /// log of the 95% Wilson interval endpoints.
  double log_prob_low = 0.0;
  double log_prob_high = 0.0;
  std::size_t hits = 0;
  std::size_t samples = 0;
};

inline constexpr std::size_t kSmallBallChunk = 4096;

/// Number of prior draws f with sobolev_norm(f, norm_exponent) <= delta.
/// Draws are grouped in chunks of kSmallBallChunk, chunk c seeded with
/// derive_seed(seed, c); the count is independent of the worker count.
[[nodiscard]] std::size_t small_ball_hits(const GaussianPrior& prior, double norm_exponent, double delta,
                                          std::size_t mc_samples, std::uint64_t seed, int workers = 0);

/// Plain Monte Carlo estimate of log Pi(||f||_{H^s} <= delta). Throws
/// RareEventError when fewer than 10 draws hit.
[[nodiscard]] SmallBallEstimate small_ball_logprob(const GaussianPrior& prior, double norm_exponent, double delta,
                                                   std::size_t mc_samples, std::uint64_t seed, int workers = 0);

struct ConcentrationQuery {
  CoeffVector f_dagger;
  double delta = 0.0;
  /// Exponent of the ambient Sobolev scale (e.g. -2 for the elliptic problem).
  double ambient_exponent = 0.0;
  std::size_t mc_samples = 0;
  std::uint64_t seed = 0;
};

struct ApproximationSolution {
  CoeffVector g;
  double value = 0.0;       ///< 0.5 ||g||_RKHS^2
  double multiplier = 0.0;  ///< KKT multiplier (0 when the constraint is inactive)
};

/// min 0.5 sum g_j^2/tau_j  s.t.  sum w_j (g_j - f_j)^2 <= delta^2, with
/// w_j = (1+lambda_j)^ambient_exponent, solved through the KKT closed form
/// and bisection on the multiplier.
[[nodiscard]] ApproximationSolution rkhs_approximation(const GaussianPrior& prior, const CoeffVector& f_dagger,
                                                       double delta, double ambient_exponent);

struct Concentration {
  double approx_term = 0.0;
  double smallball_term = 0.0;  ///< -log Pi(||f||_W <= delta)
  double phi = 0.0;
};

[[nodiscard]] Concentration concentration_fn(const GaussianPrior& prior, const ConcentrationQuery& query,
                                             int workers = 0);

enum class RateRegime { ApproxLimited, SmallBallLimited };

struct RatePrediction {
  double exponent = 0.0;
  RateRegime which = RateRegime::SmallBallLimited;
};

/// Contraction exponent min{(t+alpha)/(t+r), (t+r-d/2)/(t+r)}. Ties report
/// SmallBallLimited.
[[nodiscard]] RatePrediction predict_rate(double t, double r, double alpha, int d = 1);

namespace serial {
[[nodiscard]] std::size_t small_ball_hits(const GaussianPrior& prior, double norm_exponent, double delta,
                                          std::size_t mc_samples, std::uint64_t seed);
}

}  // namespace bvm
