#include "bvm/prior.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <omp.h>

#include "bvm/error.hpp"
#include "bvm/random.hpp"
#include "bvm/stats.hpp"

namespace bvm {

namespace {

constexpr std::size_t kMinSmallBallHits = 10;

int resolve_workers(int workers) { return workers > 0 ? workers : omp_get_max_threads(); }

/// Per-mode variance of the Sobolev-weighted coordinate (1+lambda)^s tau_j.
Eigen::VectorXd weighted_variances(const GaussianPrior& prior, double norm_exponent) {
  return sobolev_scale(prior.basis(), norm_exponent).weights.cwiseProduct(prior.variances());
}

/// Hits in one chunk. A draw stops consuming normals once its partial sum
/// exceeds delta^2; the next draw continues on fresh variates, so draws stay
/// independent.
std::size_t chunk_hits(const Eigen::VectorXd& weights, double delta2, std::size_t count, std::uint64_t seed) {
  Engine engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::size_t hits = 0;
  const Eigen::Index n = weights.size();
  for (std::size_t s = 0; s < count; ++s) {
    double acc = 0.0;
    Eigen::Index j = 0;
    for (; j < n; ++j) {
      const double g = normal(engine);
      acc += weights[j] * g * g;
      if (acc > delta2) break;
    }
    if (j == n) ++hits;
  }
  return hits;
}

void validate_small_ball(double delta, std::size_t mc_samples) {
  if (!(delta > 0.0)) throw ConfigError("small_ball: delta must be positive");
  if (mc_samples < 1000) throw ConfigError("small_ball: mc_samples must be >= 1000");
}

}  // namespace

GaussianPrior::GaussianPrior(BasisPtr basis, double r, double amplitude)
    : basis_(std::move(basis)), r_(r), amplitude_(amplitude) {
  if (!(r > 0.5)) throw ConfigError("prior: r must satisfy r > d/2 = 0.5 (RKHS H^r needs r > d/2)");
  if (!(amplitude > 0.0)) throw ConfigError("prior: amplitude must be positive");
  const auto lambda = basis_->eigenvalues();
  variances_.resize(static_cast<Eigen::Index>(lambda.size()));
  for (std::size_t j = 0; j < lambda.size(); ++j)
    variances_[static_cast<Eigen::Index>(j)] = amplitude * std::pow(1.0 + lambda[j], -r);
}

double GaussianPrior::tail_bound() const {
  constexpr std::size_t explicit_terms = 100000;
  const double pi2 = std::numbers::pi * std::numbers::pi;
  double sum = 0.0;
  if (basis_->kind() == BasisKind::DirichletSine) {
    const std::size_t first = basis_->n_modes() + 1;
    for (std::size_t j = first; j < first + explicit_terms; ++j) {
      const double jj = static_cast<double>(j);
      sum += std::pow(1.0 + pi2 * jj * jj, -r_);
    }
    const double J = static_cast<double>(first + explicit_terms);
    sum += std::pow(pi2, -r_) * std::pow(J - 1.0, 1.0 - 2.0 * r_) / (2.0 * r_ - 1.0);
  } else {
    const std::size_t first = (basis_->n_modes() - 1) / 2 + 1;
    for (std::size_t k = first; k < first + explicit_terms; ++k) {
      const double kk = static_cast<double>(k);
      sum += 2.0 * std::pow(1.0 + kk * kk, -r_);
    }
    const double K = static_cast<double>(first + explicit_terms);
    sum += 2.0 * std::pow(K - 1.0, 1.0 - 2.0 * r_) / (2.0 * r_ - 1.0);
  }
  return amplitude_ * sum;
}

GaussianPrior matern_prior(const BasisPtr& basis, double r, double amplitude) {
  return GaussianPrior(basis, r, amplitude);
}

CoeffVector sample_prior(const GaussianPrior& prior, std::uint64_t seed) {
  Eigen::VectorXd g = standard_normal_vector(prior.basis().n_modes(), seed);
  return CoeffVector(prior.basis_ptr(), prior.variances().cwiseSqrt().cwiseProduct(g));
}

double rkhs_norm(const GaussianPrior& prior, const CoeffVector& g) {
  require_same_basis(prior.basis(), g.basis(), "rkhs_norm");
  return std::sqrt((g.coeffs().array().square() / prior.variances().array()).sum());
}

// ---------------------------------------------------------------------------

std::size_t small_ball_hits(const GaussianPrior& prior, double norm_exponent, double delta, std::size_t mc_samples,
                            std::uint64_t seed, int workers) {
  validate_small_ball(delta, mc_samples);
  const Eigen::VectorXd weights = weighted_variances(prior, norm_exponent);
  const double delta2 = delta * delta;
  const auto n_chunks = static_cast<long long>((mc_samples + kSmallBallChunk - 1) / kSmallBallChunk);
  std::size_t hits = 0;
#pragma omp parallel for schedule(static) reduction(+ : hits) num_threads(resolve_workers(workers))
  for (long long c = 0; c < n_chunks; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    const std::size_t count = std::min(kSmallBallChunk, mc_samples - cu * kSmallBallChunk);
    hits += chunk_hits(weights, delta2, count, derive_seed(seed, cu));
  }
  return hits;
}

namespace serial {
std::size_t small_ball_hits(const GaussianPrior& prior, double norm_exponent, double delta, std::size_t mc_samples,
                            std::uint64_t seed) {
  validate_small_ball(delta, mc_samples);
  const Eigen::VectorXd weights = weighted_variances(prior, norm_exponent);
  std::size_t hits = 0;
  for (std::size_t c = 0; c * kSmallBallChunk < mc_samples; ++c) {
    const std::size_t count = std::min(kSmallBallChunk, mc_samples - c * kSmallBallChunk);
    hits += chunk_hits(weights, delta * delta, count, derive_seed(seed, c));
  }
  return hits;
}
}  // namespace serial

SmallBallEstimate small_ball_logprob(const GaussianPrior& prior, double norm_exponent, double delta,
                                     std::size_t mc_samples, std::uint64_t seed, int workers) {
  const std::size_t hits = small_ball_hits(prior, norm_exponent, delta, mc_samples, seed, workers);
  if (hits < kMinSmallBallHits) {
    std::ostringstream os;
    os << "small_ball_logprob: only " << hits << " of " << mc_samples << " draws within delta = " << delta
       << "; estimate unreliable (need >= " << kMinSmallBallHits << ")";
    throw RareEventError(os.str());
  }
  const WilsonInterval ci = wilson_interval(hits, mc_samples);
  SmallBallEstimate est;
  est.hits = hits;
  est.samples = mc_samples;
  est.log_prob = std::log(static_cast<double>(hits) / static_cast<double>(mc_samples));
  est.log_prob_low = std::log(ci.low);
  est.log_prob_high = std::log(ci.high);
  return est;
}

// ---------------------------------------------------------------------------

ApproximationSolution rkhs_approximation(const GaussianPrior& prior, const CoeffVector& f_dagger, double delta,
                                         double ambient_exponent) {
  require_same_basis(prior.basis(), f_dagger.basis(), "rkhs_approximation");
  if (!(delta > 0.0)) throw ConfigError("concentration: delta must be positive");
  const Eigen::VectorXd w = sobolev_scale(prior.basis(), ambient_exponent).weights;
  const Eigen::VectorXd& tau = prior.variances();
  const Eigen::VectorXd& f = f_dagger.coeffs();
  const double delta2 = delta * delta;

  // g_j(mu) - f_j = -f_j / (1 + mu tau_j w_j); the residual decreases in mu.
  auto residual = [&](double mu) {
    return (w.array() * (f.array() / (1.0 + mu * tau.array() * w.array())).square()).sum() - delta2;
  };
  auto solution = [&](double mu) -> Eigen::VectorXd {
    return (mu * w.array() * f.array() / (1.0 / tau.array() + mu * w.array())).matrix();
  };

  if (residual(0.0) <= 0.0) return {CoeffVector::zeros(f_dagger.basis_ptr()), 0.0, 0.0};

  double lo = 0.0;
  double hi = 1.0;
  while (residual(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw NumericalError("concentration: KKT multiplier bracket diverged");
  }
  const double tol = 1e-10 * delta2;
  double mu = hi;
  for (int it = 0; it < 5000; ++it) {
    mu = lo > 0.0 ? std::sqrt(lo * hi) : 0.5 * hi;
    const double res = residual(mu);
    if (std::abs(res) <= tol) break;
    if (res > 0.0) lo = mu;
    else hi = mu;
    if (hi - lo <= 1e-15 * hi) break;
  }
  // Land on the feasible side.
  if (residual(mu) > tol) mu = hi;
  CoeffVector g = f_dagger.with(solution(mu));
  const double value = 0.5 * (g.coeffs().array().square() / tau.array()).sum();
  return {std::move(g), value, mu};
}

Concentration concentration_fn(const GaussianPrior& prior, const ConcentrationQuery& query, int workers) {
  if (!(query.delta > 0.0)) throw ConfigError("concentration: delta must be positive");
  if (query.mc_samples < 1) throw ConfigError("concentration: mc_samples must be >= 1");
  Concentration c;
  c.approx_term = rkhs_approximation(prior, query.f_dagger, query.delta, query.ambient_exponent).value;
  c.smallball_term =
      -small_ball_logprob(prior, query.ambient_exponent, query.delta, query.mc_samples, query.seed, workers).log_prob;
  c.phi = c.approx_term + c.smallball_term;
  return c;
}

RatePrediction predict_rate(double t, double r, double alpha, int d) {
  if (d < 1) throw ConfigError("predict_rate: d must be a positive integer");
  const double half_d = 0.5 * static_cast<double>(d);
  if (!(t >= 0.0)) throw ConfigError("predict_rate: t must be >= 0");
  if (!(r > half_d)) throw ConfigError("predict_rate: r must satisfy r > d/2");
  if (!(alpha > -t)) throw ConfigError("predict_rate: alpha must satisfy alpha > -t");
  const double approx = (t + alpha) / (t + r);
  const double small_ball = (t + r - half_d) / (t + r);
  if (approx < small_ball) return {approx, RateRegime::ApproxLimited};
  return {small_ball, RateRegime::SmallBallLimited};
}

}  // namespace bvm
