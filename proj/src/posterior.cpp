#include "bvm/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "bvm/error.hpp"
#include "bvm/random.hpp"
#include "bvm/stats.hpp"

namespace bvm {

Observation simulate_observation(const ForwardOperator& op, const CoeffVector& f_dagger, double epsilon,
                                 std::uint64_t noise_seed) {
  if (!(epsilon > 0.0)) throw ConfigError("observation: epsilon must be positive");
  const Eigen::VectorXd w = standard_normal_vector(f_dagger.size(), noise_seed);
  CoeffVector clean = apply(op, f_dagger);
  CoeffVector data = clean.with(clean.coeffs() + epsilon * w);
  return Observation{std::move(data), epsilon, f_dagger, noise_seed};
}

Observation make_observation(CoeffVector data, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("observation: epsilon must be positive");
  return Observation{std::move(data), epsilon, std::nullopt, 0};
}

// ---------------------------------------------------------------------------

std::shared_ptr<const PosteriorCovariance> PosteriorCovariance::diagonal(Eigen::VectorXd variances) {
  if ((variances.array() < 0.0).any()) throw NumericalError("posterior covariance: negative variance");
  auto c = std::make_shared<PosteriorCovariance>();
  c->diagonal_ = true;
  c->variances_ = std::move(variances);
  return c;
}

std::shared_ptr<const PosteriorCovariance> PosteriorCovariance::dense(const Eigen::MatrixXd& cov) {
  Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericalError("posterior covariance: eigendecomposition failed");
  Eigen::VectorXd values = eig.eigenvalues();
  const double trace = sym.trace();
  const double worst = values.minCoeff();
  if (worst < -1e-10 * std::abs(trace)) {
    std::ostringstream os;
    os << "posterior covariance: PSD defect " << worst << " exceeds 1e-10 * trace (" << trace << ")";
    throw NumericalError(os.str());
  }
  values = values.cwiseMax(0.0);
  auto c = std::make_shared<PosteriorCovariance>();
  c->diagonal_ = false;
  c->factor_ = eig.eigenvectors() * values.cwiseSqrt().asDiagonal();
  c->matrix_ = eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
  return c;
}

const Eigen::VectorXd& PosteriorCovariance::variances() const {
  if (!diagonal_) throw ConfigError("posterior covariance is dense");
  return variances_;
}

const Eigen::MatrixXd& PosteriorCovariance::matrix() const {
  if (diagonal_) throw ConfigError("posterior covariance is diagonal");
  return matrix_;
}

double PosteriorCovariance::quadratic_form(const Eigen::VectorXd& psi) const {
  if (diagonal_) return (variances_.array() * psi.array().square()).sum();
  return std::max(0.0, psi.dot(matrix_ * psi));
}

Eigen::VectorXd PosteriorCovariance::transform(const Eigen::VectorXd& z) const {
  if (diagonal_) return variances_.cwiseSqrt().cwiseProduct(z);
  return factor_ * z;
}

Eigen::MatrixXd PosteriorCovariance::to_dense() const {
  if (diagonal_) return variances_.asDiagonal();
  return matrix_;
}

PosteriorGaussian::PosteriorGaussian(CoeffVector mean, std::shared_ptr<const PosteriorCovariance> covariance,
                                     double epsilon)
    : mean_(std::move(mean)), covariance_(std::move(covariance)), epsilon_(epsilon) {
  if (!covariance_) throw ConfigError("posterior: null covariance");
}

// ---------------------------------------------------------------------------

ConjugateUpdate::ConjugateUpdate(const GaussianPrior& prior, const ForwardOperator& op, double epsilon)
    : basis_(op.basis_ptr()), epsilon_(epsilon), diagonal_(op.is_diagonal()) {
  require_same_basis(prior.basis(), op.basis(), "posterior_update");
  if (!(epsilon > 0.0)) throw ConfigError("posterior_update: epsilon must be positive");
  const Eigen::VectorXd& tau = prior.variances();
  const double eps2 = epsilon * epsilon;

  if (diagonal_) {
    const Eigen::ArrayXd a = op.multipliers().array();
    const Eigen::ArrayXd denom = a.square() * tau.array() + eps2;
    diag_gain_ = (tau.array() * a / denom).matrix();
    covariance_ = PosteriorCovariance::diagonal((eps2 * tau.array() / denom).matrix());
    return;
  }

  const Eigen::MatrixXd& a = op.matrix();
  const Eigen::Index n = a.rows();
  const Eigen::MatrixXd a_sigma = a * tau.asDiagonal();  // A Sigma
  Eigen::MatrixXd s = a_sigma * a.transpose();
  s.diagonal().array() += eps2;
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) {
    std::ostringstream os;
    os << "posterior_update: data-space system not positive definite (eps = " << epsilon << ", n = " << n << ")";
    throw NumericalError(os.str());
  }
  // K = Sigma A^T S^{-1} = (S^{-1} A Sigma)^T.
  gain_ = llt.solve(a_sigma).transpose();
  Eigen::MatrixXd cov = Eigen::MatrixXd(tau.asDiagonal()) - gain_ * a_sigma;
  covariance_ = PosteriorCovariance::dense(cov);
}

PosteriorGaussian ConjugateUpdate::operator()(const Observation& obs) const {
  require_same_basis(*basis_, obs.data.basis(), "posterior_update");
  if (obs.epsilon != epsilon_) throw ConfigError("posterior_update: observation epsilon differs from the update");
  Eigen::VectorXd mean = diagonal_ ? Eigen::VectorXd(diag_gain_.cwiseProduct(obs.data.coeffs()))
                                   : Eigen::VectorXd(gain_ * obs.data.coeffs());
  return PosteriorGaussian(obs.data.with(std::move(mean)), covariance_, epsilon_);
}

PosteriorGaussian posterior_update(const GaussianPrior& prior, const ForwardOperator& op, const Observation& obs) {
  return ConjugateUpdate(prior, op, obs.epsilon)(obs);
}

CoeffVector tikhonov_solve(const GaussianPrior& prior, const ForwardOperator& op, const Observation& obs) {
  require_same_basis(prior.basis(), op.basis(), "tikhonov_solve");
  require_same_basis(op.basis(), obs.data.basis(), "tikhonov_solve");
  if (!(obs.epsilon > 0.0)) throw ConfigError("tikhonov_solve: epsilon must be positive");
  const double eps2 = obs.epsilon * obs.epsilon;
  const Eigen::VectorXd& tau = prior.variances();
  const Eigen::VectorXd rhs = adjoint_apply(op, obs.data).coeffs() / eps2;

  if (op.is_diagonal()) {
    const Eigen::ArrayXd a = op.multipliers().array();
    const Eigen::ArrayXd precision = a.square() / eps2 + tau.array().inverse();
    return obs.data.with((rhs.array() / precision).matrix());
  }
  const Eigen::MatrixXd& a = op.matrix();
  Eigen::MatrixXd h = a.transpose() * a / eps2;
  h.diagonal() += tau.cwiseInverse();
  Eigen::LLT<Eigen::MatrixXd> llt(h);
  if (llt.info() != Eigen::Success) throw NumericalError("tikhonov_solve: normal equations not positive definite");
  return obs.data.with(llt.solve(rhs));
}

double onsager_machlup(const GaussianPrior& prior, const ForwardOperator& op, const Observation& obs,
                       const CoeffVector& f) {
  const CoeffVector af = apply(op, f);
  const double eps2 = obs.epsilon * obs.epsilon;
  const double rk = rkhs_norm(prior, f);
  return -inner(obs.data, af) / eps2 + inner(af, af) / (2.0 * eps2) + 0.5 * rk * rk;
}

// ---------------------------------------------------------------------------

FunctionalMarginal functional_marginal(const PosteriorGaussian& post, const CoeffVector& psi) {
  require_same_basis(post.mean().basis(), psi.basis(), "functional_marginal");
  return {inner(post.mean(), psi), post.covariance().quadratic_form(psi.coeffs())};
}

CredibleInterval credible_interval(const PosteriorGaussian& post, const CoeffVector& psi, double level) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("credible_interval: level must lie in (0,1)");
  const FunctionalMarginal m = functional_marginal(post, psi);
  return {m.mean, two_sided_normal_quantile(level) * std::sqrt(m.variance)};
}

CoeffVector posterior_sample(const PosteriorGaussian& post, std::uint64_t seed) {
  const Eigen::VectorXd z = standard_normal_vector(post.mean().size(), seed);
  return post.mean().with(post.mean().coeffs() + post.covariance().transform(z));
}

std::vector<double> credible_ball_norms(const PosteriorGaussian& post, double beta, std::size_t n_draws,
                                        std::uint64_t seed) {
  if (beta < 0.0) throw ConfigError("credible_ball_radius: beta must be >= 0");
  const Eigen::VectorXd w = sobolev_scale(post.mean().basis(), -beta).weights;
  Engine engine(seed);
  Eigen::VectorXd z(post.mean().coeffs().size());
  std::vector<double> norms(n_draws);
  for (std::size_t d = 0; d < n_draws; ++d) {
    fill_standard_normal(engine, z);
    const Eigen::VectorXd dev = post.covariance().transform(z);
    norms[d] = std::sqrt((w.array() * dev.array().square()).sum());
  }
  std::sort(norms.begin(), norms.end());
  return norms;
}

double higher_quantile(const std::vector<double>& sorted, double level) {
  if (sorted.empty()) throw ConfigError("quantile of an empty sample");
  const double pos = level * static_cast<double>(sorted.size() - 1);
  const auto idx = std::min(sorted.size() - 1, static_cast<std::size_t>(std::ceil(pos)));
  return sorted[idx];
}

double credible_ball_radius(const PosteriorGaussian& post, double beta, double level, std::size_t n_draws,
                            std::uint64_t seed) {
  if (n_draws < 1000) throw ConfigError("credible_ball_radius: n_draws must be >= 1000");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("credible_ball_radius: level must lie in (0,1)");
  return higher_quantile(credible_ball_norms(post, beta, n_draws, seed), level);
}

}  // namespace bvm
