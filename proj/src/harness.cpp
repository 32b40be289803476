#include "bvm/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <sstream>

#include <omp.h>

#include "bvm/error.hpp"
#include "bvm/random.hpp"
#include "bvm/stats.hpp"

namespace bvm {

namespace {

constexpr std::uint64_t kNoiseStream = 0;
constexpr std::uint64_t kBallStream = 1;

double relative_gap(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

/// Inputs shared by every replicate; immutable once built.
struct ReplicateContext {
  const GaussianPrior& prior;
  const ForwardOperator& op;
  const CoeffVector& f_dagger;
  std::span<const TestFunctional> functionals;
  const ReplicateConfig& config;
  ConjugateUpdate update;
  CoeffVector clean_data;
  std::vector<Eigen::VectorXd> a_psi_tilde;
  std::vector<double> truth_functional;
  double quantile;
  std::optional<Eigen::VectorXd> ball_weights;
};

ReplicateContext make_context(const GaussianPrior& prior, const ForwardOperator& op, const CoeffVector& f_dagger,
                              std::span<const TestFunctional> functionals, const ReplicateConfig& config) {
  require_same_basis(op.basis(), f_dagger.basis(), "run_replicates");
  if (config.n_replicates < 1) throw ConfigError("run_replicates: n_replicates must be >= 1");
  if (functionals.empty()) throw ConfigError("run_replicates: no functionals given");
  if (config.ball_beta && config.ball_draws < 1000) throw ConfigError("run_replicates: ball draws must be >= 1000");
  ReplicateContext ctx{prior,
                       op,
                       f_dagger,
                       functionals,
                       config,
                       ConjugateUpdate(prior, op, config.epsilon),
                       apply(op, f_dagger),
                       {},
                       {},
                       two_sided_normal_quantile(config.level),
                       std::nullopt};
  for (const TestFunctional& tf : functionals) {
    ctx.a_psi_tilde.push_back(apply(op, tf.psi_tilde).coeffs());
    ctx.truth_functional.push_back(inner(f_dagger, tf.psi));
  }
  if (config.ball_beta) {
    if (*config.ball_beta < 0.0) throw ConfigError("run_replicates: ball beta must be >= 0");
    ctx.ball_weights = sobolev_scale(op.basis(), -*config.ball_beta).weights;
  }
  return ctx;
}

/// Fills results[i*K .. i*K + K) for replicate i.
void run_one_replicate(const ReplicateContext& ctx, std::size_t i, std::span<ReplicateResult> out) {
  const double eps = ctx.config.epsilon;
  const Eigen::VectorXd w = replicate_noise(ctx.f_dagger.size(), ctx.config.master_seed, i);
  Observation obs{ctx.clean_data.with(ctx.clean_data.coeffs() + eps * w), eps, ctx.f_dagger,
                  replicate_noise_seed(ctx.config.master_seed, i)};
  const PosteriorGaussian post = ctx.update(obs);

  std::optional<double> ball_radius;
  std::optional<bool> ball_covered;
  if (ctx.config.ball_beta) {
    const std::vector<double> norms =
        credible_ball_norms(post, *ctx.config.ball_beta, ctx.config.ball_draws,
                            replicate_ball_seed(ctx.config.master_seed, i));
    ball_radius = higher_quantile(norms, ctx.config.level);
    const Eigen::VectorXd diff = ctx.f_dagger.coeffs() - post.mean().coeffs();
    const double dist = std::sqrt((ctx.ball_weights->array() * diff.array().square()).sum());
    ball_covered = dist <= *ball_radius;
  }

  for (std::size_t k = 0; k < ctx.functionals.size(); ++k) {
    const TestFunctional& tf = ctx.functionals[k];
    const FunctionalMarginal m = functional_marginal(post, tf.psi);
    ReplicateResult& r = out[k];
    r.replicate_index = i;
    r.functional_index = k;
    r.epsilon = eps;
    r.functional_mean = m.mean;
    r.truth_functional = ctx.truth_functional[k];
    r.scaled_error = (m.mean - r.truth_functional) / eps;
    r.hat_psi = r.truth_functional - eps * ctx.a_psi_tilde[k].dot(w);
    r.posterior_functional_variance = m.variance;
    r.interval_radius = ctx.quantile * std::sqrt(m.variance);
    r.interval_covered = std::abs(r.truth_functional - m.mean) <= r.interval_radius;
    r.ball_radius = ball_radius;
    r.ball_covered = ball_covered;
    r.limiting_variance = tf.limiting_variance;
  }
}

[[noreturn]] void rethrow_with_index(const std::exception_ptr& ep, std::size_t index) {
  try {
    std::rethrow_exception(ep);
  } catch (const Error& e) {
    std::ostringstream os;
    os << "replicate " << index << ": " << e.what();
    throw Error(e.category(), os.str());
  }
}

double integral_of_cdf(double x, double sigma) {
  // Antiderivative of Phi(x / sigma).
  return x * normal_cdf(x / sigma) + sigma * normal_pdf(x / sigma);
}

/// int_a^b |p - Phi(x/sigma)| dx for a <= b.
double abs_cdf_gap(double p, double a, double b, double sigma) {
  if (b <= a) return 0.0;
  auto signed_part = [&](double lo, double hi) {
    return p * (hi - lo) - (integral_of_cdf(hi, sigma) - integral_of_cdf(lo, sigma));
  };
  if (p > 0.0 && p < 1.0) {
    const double cross = sigma * normal_quantile(p);
    if (cross > a && cross < b) return std::abs(signed_part(a, cross)) + std::abs(signed_part(cross, b));
  }
  return std::abs(signed_part(a, b));
}

}  // namespace

// ---------------------------------------------------------------------------

TestFunctional representer(const ForwardOperator& op, const CoeffVector& psi, double cond_limit) {
  require_same_basis(op.basis(), psi.basis(), "representer");
  CoeffVector psi_tilde = -1.0 * fisher_solve(op, psi, cond_limit);
  if (const ForwardOperator* L = op.differential_operator()) {
    const CoeffVector closed_form = -1.0 * apply(*L, apply(*L, psi));
    const double gap = relative_gap(psi_tilde.coeffs(), closed_form.coeffs());
    if (gap > 1e-8) {
      std::ostringstream os;
      os << "representer: Fisher solve and -L(L psi) disagree (relative gap " << gap << ")";
      throw NumericalError(os.str());
    }
  }
  const CoeffVector a_psi_tilde = apply(op, psi_tilde);
  return {psi, std::move(psi_tilde), inner(a_psi_tilde, a_psi_tilde), FunctionalConstruction::FromPsi};
}

TestFunctional heat_psi_from_representer(const CoeffVector& psi_tilde, double T) {
  if (psi_tilde.basis().kind() != BasisKind::DirichletSine)
    throw ConfigError("heat_psi_from_representer: requires a DirichletSine basis");
  if (!(T >= 0.0)) throw ConfigError("heat_psi_from_representer: T must be >= 0");
  const auto lambda = psi_tilde.basis().eigenvalues();
  Eigen::VectorXd psi(psi_tilde.coeffs().size());
  double variance = 0.0;
  for (std::size_t j = 0; j < lambda.size(); ++j) {
    const double c = psi_tilde[j];
    const auto jj = static_cast<Eigen::Index>(j);
    if (c == 0.0) {
      psi[jj] = 0.0;
      continue;
    }
    if (2.0 * lambda[j] * T > 300.0) {
      std::ostringstream os;
      os << "heat_psi_from_representer: mode " << j + 1 << " has 2 lambda T = " << 2.0 * lambda[j] * T
         << " > 300; band-limit psi_tilde";
      throw ConfigError(os.str());
    }
    const double damp = std::exp(-2.0 * lambda[j] * T);
    psi[jj] = -damp * c;
    variance += damp * c * c;
  }
  return {psi_tilde.with(std::move(psi)), psi_tilde, variance, FunctionalConstruction::FromRepresenter};
}

CoeffVector bump_functional(const BasisPtr& basis, Interval support, Interval plateau, int frequency,
                            std::size_t band) {
  const BumpCutoff zeta = make_bump(support, plateau);
  if (band < 1 || band > basis->n_modes()) throw ConfigError("bump_functional: band must lie in [1, n_modes]");
  const double omega =
      basis->kind() == BasisKind::DirichletSine ? std::numbers::pi * frequency : 2.0 * std::numbers::pi * frequency;
  const auto grid = basis->grid();
  Eigen::VectorXd values(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i)
    values[static_cast<Eigen::Index>(i)] = std::sin(omega * grid[i]);
  Eigen::VectorXd c = multiply_on_grid(zeta, values, basis).coeffs();
  c.tail(c.size() - static_cast<Eigen::Index>(band)).setZero();
  return CoeffVector(basis, std::move(c));
}

// ---------------------------------------------------------------------------

std::uint64_t replicate_noise_seed(std::uint64_t master_seed, std::size_t replicate) {
  return derive_seed(derive_seed(master_seed, replicate), kNoiseStream);
}

std::uint64_t replicate_ball_seed(std::uint64_t master_seed, std::size_t replicate) {
  return derive_seed(derive_seed(master_seed, replicate), kBallStream);
}

Eigen::VectorXd replicate_noise(std::size_t n_modes, std::uint64_t master_seed, std::size_t replicate) {
  return standard_normal_vector(n_modes, replicate_noise_seed(master_seed, replicate));
}

std::vector<ReplicateResult> run_replicates(const GaussianPrior& prior, const ForwardOperator& op,
                                            const CoeffVector& f_dagger, std::span<const TestFunctional> functionals,
                                            const ReplicateConfig& config, int workers) {
  const ReplicateContext ctx = make_context(prior, op, f_dagger, functionals, config);
  const std::size_t k = functionals.size();
  std::vector<ReplicateResult> results(config.n_replicates * k);
  const auto n = static_cast<long long>(config.n_replicates);
  std::vector<std::exception_ptr> failures(config.n_replicates);
  const int threads = workers > 0 ? workers : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic, 8) num_threads(threads)
  for (long long i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      run_one_replicate(ctx, idx, std::span(results).subspan(idx * k, k));
    } catch (...) {
      failures[idx] = std::current_exception();
    }
  }
  for (std::size_t i = 0; i < failures.size(); ++i)
    if (failures[i]) rethrow_with_index(failures[i], i);
  return results;
}

namespace serial {
std::vector<ReplicateResult> run_replicates(const GaussianPrior& prior, const ForwardOperator& op,
                                            const CoeffVector& f_dagger, std::span<const TestFunctional> functionals,
                                            const ReplicateConfig& config) {
  const ReplicateContext ctx = make_context(prior, op, f_dagger, functionals, config);
  const std::size_t k = functionals.size();
  std::vector<ReplicateResult> results(config.n_replicates * k);
  for (std::size_t i = 0; i < config.n_replicates; ++i) {
    try {
      run_one_replicate(ctx, i, std::span(results).subspan(i * k, k));
    } catch (...) {
      rethrow_with_index(std::current_exception(), i);
    }
  }
  return results;
}
}  // namespace serial

std::vector<double> posterior_mean_errors(const GaussianPrior& prior, const ForwardOperator& op,
                                          const CoeffVector& f_dagger, double epsilon, std::size_t n_replicates,
                                          double norm_exponent, std::uint64_t master_seed, int workers) {
  require_same_basis(op.basis(), f_dagger.basis(), "posterior_mean_errors");
  if (n_replicates < 1) throw ConfigError("posterior_mean_errors: n_replicates must be >= 1");
  const ConjugateUpdate update(prior, op, epsilon);
  const CoeffVector clean = apply(op, f_dagger);
  std::vector<double> errors(n_replicates);
  const auto n = static_cast<long long>(n_replicates);
  const int threads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 8) num_threads(threads)
  for (long long i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const Eigen::VectorXd w = replicate_noise(f_dagger.size(), master_seed, idx);
    const PosteriorGaussian post = update(make_observation(clean.with(clean.coeffs() + epsilon * w), epsilon));
    errors[idx] = sobolev_norm(post.mean() - f_dagger, norm_exponent);
  }
  return errors;
}

// ---------------------------------------------------------------------------

double ks_distance(std::span<const double> samples, double variance) {
  if (samples.size() < 2) throw ConfigError("ks_distance: need >= 2 samples");
  if (!(variance > 0.0)) throw ConfigError("ks_distance: variance must be positive");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double sigma = std::sqrt(variance);
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = normal_cdf(sorted[i] / sigma);
    const double above = static_cast<double>(i + 1) / n - f;
    const double below = f - static_cast<double>(i) / n;
    d = std::max({d, above, below});
  }
  return d;
}

double bl_distance_upper(std::span<const double> samples, double variance, double clip) {
  if (samples.size() < 2) throw ConfigError("bl_distance_upper: need >= 2 samples");
  if (!(variance > 0.0)) throw ConfigError("bl_distance_upper: variance must be positive");
  if (!(clip > 0.0)) throw ConfigError("bl_distance_upper: clip must be positive");
  const double sigma = std::sqrt(variance);
  const double lo = -clip * sigma;
  const double hi = clip * sigma;
  std::vector<double> x(samples.begin(), samples.end());
  for (double& v : x) v = std::clamp(v, lo, hi);
  std::sort(x.begin(), x.end());

  const double n = static_cast<double>(x.size());
  double w1 = abs_cdf_gap(0.0, lo, x.front(), sigma);
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    w1 += abs_cdf_gap(static_cast<double>(i + 1) / n, x[i], x[i + 1], sigma);
  w1 += abs_cdf_gap(1.0, x.back(), hi, sigma);
  return std::min(2.0, w1);
}

CoverageReport coverage_report(std::span<const ReplicateResult> results, CoverageKind which, double target_level) {
  if (results.empty()) throw ConfigError("coverage_report: no results");
  const std::size_t functional = results.front().functional_index;
  std::size_t hits = 0;
  double radius_sum = 0.0;
  std::vector<double> scaled;
  scaled.reserve(results.size());
  for (const ReplicateResult& r : results) {
    if (r.functional_index != functional || r.epsilon != results.front().epsilon)
      throw ConfigError("coverage_report: results mix functionals or noise levels");
    if (which == CoverageKind::Ball) {
      if (!r.ball_radius || !r.ball_covered) throw ConfigError("coverage_report: ball fields missing");
      hits += *r.ball_covered ? 1 : 0;
      radius_sum += *r.ball_radius / r.epsilon;
    } else {
      hits += r.interval_covered ? 1 : 0;
      radius_sum += r.interval_radius / r.epsilon;
    }
    scaled.push_back(r.scaled_error);
  }
  CoverageReport rep;
  rep.n_replicates = results.size();
  rep.hit_rate = static_cast<double>(hits) / static_cast<double>(results.size());
  const WilsonInterval ci = wilson_interval(hits, results.size());
  rep.wilson_low = std::min(ci.low, rep.hit_rate);
  rep.wilson_high = std::max(ci.high, rep.hit_rate);
  rep.mean_scaled_radius = radius_sum / static_cast<double>(results.size());
  rep.ks_to_limit = scaled.size() >= 2 && results.front().limiting_variance > 0.0
                        ? ks_distance(scaled, results.front().limiting_variance)
                        : std::numeric_limits<double>::quiet_NaN();
  rep.target_level = target_level;
  return rep;
}

RateFit rate_fit(std::span<const double> epsilons, std::span<const double> errors, double predicted_exponent) {
  if (epsilons.size() != errors.size()) throw ConfigError("rate_fit: ladder and error lists differ in length");
  if (epsilons.size() < 3) throw ConfigError("rate_fit: need >= 3 ladder points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0) || !(errors[i] > 0.0)) throw ConfigError("rate_fit: entries must be positive");
    lx.push_back(std::log(epsilons[i]));
    ly.push_back(std::log(errors[i]));
  }
  const LineFit fit = least_squares_line(lx, ly);
  return {std::vector<double>(epsilons.begin(), epsilons.end()), std::vector<double>(errors.begin(), errors.end()),
          fit.slope, fit.intercept, fit.r_squared, predicted_exponent};
}

TightnessSeries tightness_series(const ForwardOperator& op_L, double beta, std::size_t max_modes) {
  if (max_modes < 100) throw ConfigError("tightness_series: max_modes must be >= 100");
  if (max_modes > op_L.basis().n_modes()) throw ConfigError("tightness_series: max_modes exceeds the basis size");
  const auto lambda = op_L.basis().eigenvalues();
  TightnessSeries out;
  out.summands.resize(max_modes);
  out.partial_sums.resize(max_modes);
  double s = 0.0;
  for (std::size_t j = 0; j < max_modes; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const double column2 = op_L.is_diagonal() ? op_L.multipliers()[jj] * op_L.multipliers()[jj]
                                              : op_L.matrix().col(jj).squaredNorm();
    out.summands[j] = std::pow(1.0 + lambda[j], -beta) * column2;
    s += out.summands[j];
    out.partial_sums[j] = s;
  }
  // S_J at 1-based J is partial_sums[J - 1].
  const std::size_t half = max_modes / 2;
  const std::size_t quarter = half / 2;
  const double s_full = out.partial_sums[2 * half - 1];
  const double s_half = out.partial_sums[half - 1];
  const double s_quarter = out.partial_sums[quarter - 1];
  const double tail_ratio = (s_full - s_half) / s_half;
  const double growth = (s_full - s_half) / (s_half - s_quarter);
  if (tail_ratio < 1e-3) out.verdict = TightnessVerdict::Converges;
  else if (growth > 1.1) out.verdict = TightnessVerdict::Diverges;
  else out.verdict = TightnessVerdict::Boundary;
  return out;
}

const char* to_string(TightnessVerdict v) noexcept {
  switch (v) {
    case TightnessVerdict::Converges: return "Converges";
    case TightnessVerdict::Diverges: return "Diverges";
    case TightnessVerdict::Boundary: return "Boundary";
  }
  return "?";
}

// ---------------------------------------------------------------------------

TruncatedSvdEstimator oracle_tsvd(const ForwardOperator& op, const CoeffVector& f_dagger, const CoeffVector& psi,
                                  double epsilon) {
  require_same_basis(op.basis(), psi.basis(), "oracle_tsvd");
  if (!(epsilon > 0.0)) throw ConfigError("oracle_tsvd: epsilon must be positive");
  const SingularSystem sys = op.singular_system();
  const Eigen::VectorXd fv = sys.v.transpose() * f_dagger.coeffs();
  const Eigen::VectorXd pv = sys.v.transpose() * psi.coeffs();
  const Eigen::Index n = sys.s.size();
  // bias(K) = -eps^{-1} sum_{k >= K} fv_k pv_k
  Eigen::VectorXd tail(n + 1);
  tail[n] = 0.0;
  for (Eigen::Index k = n - 1; k >= 0; --k) tail[k] = tail[k + 1] + fv[k] * pv[k];
  // Local worst case over {f_dagger + h : ||A h|| <= eps}: the dropped part of
  // -A psi_tilde adds its norm to the bias.
  Eigen::VectorXd dropped(n + 1);
  dropped[n] = 0.0;
  for (Eigen::Index k = n - 1; k >= 0; --k)
    dropped[k] = dropped[k + 1] + (sys.s[k] > 0.0 ? pv[k] * pv[k] / (sys.s[k] * sys.s[k])
                                                  : (pv[k] != 0.0 ? std::numeric_limits<double>::infinity() : 0.0));
  TruncatedSvdEstimator best;
  best.worst_case_scaled_mse = std::numeric_limits<double>::infinity();
  double variance = 0.0;
  for (Eigen::Index k = 0; k <= n; ++k) {
    if (k > 0) {
      if (sys.s[k - 1] == 0.0) break;
      variance += pv[k - 1] * pv[k - 1] / (sys.s[k - 1] * sys.s[k - 1]);
    }
    const double bias = tail[k] / epsilon;
    const double worst_bias = std::abs(bias) + std::sqrt(dropped[k]);
    const double worst = worst_bias * worst_bias + variance;
    if (worst < best.worst_case_scaled_mse) {
      best.truncation = static_cast<std::size_t>(k);
      best.predicted_scaled_mse = bias * bias + variance;
      best.worst_case_scaled_mse = worst;
      best.scaled_variance = variance;
    }
  }
  return best;
}

std::vector<double> tsvd_scaled_errors(const ForwardOperator& op, const CoeffVector& f_dagger, const CoeffVector& psi,
                                       double epsilon, std::size_t truncation, std::size_t n_replicates,
                                       std::uint64_t master_seed) {
  const SingularSystem sys = op.singular_system();
  const auto K = static_cast<Eigen::Index>(truncation);
  if (K > sys.s.size()) throw ConfigError("tsvd: truncation exceeds the number of singular values");
  // <f_hat, psi> = M^T h with h = U_K diag(1/s) V_K^T psi.
  const Eigen::VectorXd pv = sys.v.leftCols(K).transpose() * psi.coeffs();
  const Eigen::VectorXd h = sys.u.leftCols(K) * pv.cwiseQuotient(sys.s.head(K));
  const Eigen::VectorXd clean = apply(op, f_dagger).coeffs();
  const double truth = inner(f_dagger, psi);
  std::vector<double> out(n_replicates);
  for (std::size_t i = 0; i < n_replicates; ++i) {
    const Eigen::VectorXd m = clean + epsilon * replicate_noise(f_dagger.size(), master_seed, i);
    out[i] = (m.dot(h) - truth) / epsilon;
  }
  return out;
}

}  // namespace bvm
