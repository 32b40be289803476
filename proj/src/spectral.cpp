#include "bvm/spectral.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "bvm/error.hpp"
#include "bvm/random.hpp"

namespace bvm {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double sqrt2 = std::numbers::sqrt2;

double smooth_step(double t) noexcept {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t);
  const double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

}  // namespace

SpectralBasis::SpectralBasis(BasisKind kind, std::size_t n_modes, std::size_t oversample)
    : kind_(kind), n_modes_(n_modes), oversample_(oversample) {
  if (n_modes == 0) throw ConfigError("basis: n_modes must be >= 1");
  if (oversample < 4) throw ConfigError("basis: oversample must be >= 4");
  if (kind == BasisKind::FourierTorus && n_modes % 2 == 0)
    throw ConfigError("basis: FourierTorus needs an odd mode count (0 plus symmetric pairs)");

  eigenvalues_.resize(n_modes);
  for (std::size_t m = 0; m < n_modes; ++m) {
    const double k = static_cast<double>(std::abs(frequency(m)));
    eigenvalues_[m] = kind == BasisKind::DirichletSine ? (pi * k) * (pi * k) : k * k;
  }

  const std::size_t n_grid = n_modes * oversample;
  grid_.resize(n_grid);
  const double h = 1.0 / static_cast<double>(n_grid);
  for (std::size_t i = 0; i < n_grid; ++i)
    grid_[i] = kind == BasisKind::DirichletSine ? (static_cast<double>(i) + 0.5) * h
                                                : static_cast<double>(i) * h;

  table_.resize(static_cast<Eigen::Index>(n_modes), static_cast<Eigen::Index>(n_grid));
  for (std::size_t m = 0; m < n_modes; ++m)
    for (std::size_t i = 0; i < n_grid; ++i)
      table_(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i)) = eval(m, grid_[i]);
}

int SpectralBasis::frequency(std::size_t mode) const {
  if (mode >= n_modes_) throw ShapeError("mode index out of range");
  if (kind_ == BasisKind::DirichletSine) return static_cast<int>(mode) + 1;
  if (mode == 0) return 0;
  const int k = static_cast<int>((mode + 1) / 2);
  return mode % 2 == 1 ? k : -k;
}

bool SpectralBasis::contains(double x) const noexcept {
  if (kind_ == BasisKind::DirichletSine) return x >= 0.0 && x <= 1.0;
  return x >= 0.0 && x < 1.0;
}

double SpectralBasis::eval(std::size_t mode, double x) const {
  const int k = frequency(mode);
  if (kind_ == BasisKind::DirichletSine) return sqrt2 * std::sin(pi * k * x);
  if (k == 0) return 1.0;
  return k > 0 ? sqrt2 * std::cos(2.0 * pi * k * x) : sqrt2 * std::sin(-2.0 * pi * k * x);
}

double SpectralBasis::eval_derivative(std::size_t mode, double x) const {
  const int k = frequency(mode);
  if (kind_ == BasisKind::DirichletSine) return sqrt2 * pi * k * std::cos(pi * k * x);
  if (k == 0) return 0.0;
  const double w = 2.0 * pi * std::abs(k);
  return k > 0 ? -sqrt2 * w * std::sin(w * x) : sqrt2 * w * std::cos(w * x);
}

BasisPtr build_basis(BasisKind kind, std::size_t n_modes, std::size_t oversample) {
  return std::make_shared<const SpectralBasis>(kind, n_modes, oversample);
}

// ---------------------------------------------------------------------------

CoeffVector::CoeffVector(BasisPtr basis, Eigen::VectorXd coeffs)
    : basis_(std::move(basis)), coeffs_(std::move(coeffs)) {
  if (!basis_) throw ConfigError("CoeffVector: null basis");
  if (static_cast<std::size_t>(coeffs_.size()) != basis_->n_modes()) {
    std::ostringstream os;
    os << "CoeffVector: " << coeffs_.size() << " coefficients for a " << basis_->n_modes()
       << "-mode basis";
    throw ShapeError(os.str());
  }
  if (!coeffs_.allFinite()) throw NumericalError("CoeffVector: non-finite coefficient");
}

CoeffVector CoeffVector::zeros(BasisPtr basis) {
  const auto n = static_cast<Eigen::Index>(basis->n_modes());
  return CoeffVector(std::move(basis), Eigen::VectorXd::Zero(n));
}

CoeffVector CoeffVector::unit(BasisPtr basis, std::size_t mode) {
  if (mode >= basis->n_modes()) throw ShapeError("unit vector mode out of range");
  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis->n_modes()));
  c[static_cast<Eigen::Index>(mode)] = 1.0;
  return CoeffVector(std::move(basis), std::move(c));
}

CoeffVector operator+(const CoeffVector& a, const CoeffVector& b) {
  require_same_basis(a.basis(), b.basis(), "operator+");
  return CoeffVector(a.basis_, a.coeffs_ + b.coeffs_);
}

CoeffVector operator-(const CoeffVector& a, const CoeffVector& b) {
  require_same_basis(a.basis(), b.basis(), "operator-");
  return CoeffVector(a.basis_, a.coeffs_ - b.coeffs_);
}

CoeffVector operator*(double s, const CoeffVector& a) { return CoeffVector(a.basis_, s * a.coeffs_); }

void require_same_basis(const SpectralBasis& a, const SpectralBasis& b, const char* where) {
  if (!a.same_space(b)) throw ShapeError(std::string(where) + ": basis mismatch");
}

// ---------------------------------------------------------------------------

SobolevScale sobolev_scale(const SpectralBasis& basis, double s) {
  SobolevScale scale{s, Eigen::VectorXd(static_cast<Eigen::Index>(basis.n_modes()))};
  const auto lambda = basis.eigenvalues();
  for (std::size_t j = 0; j < lambda.size(); ++j)
    scale.weights[static_cast<Eigen::Index>(j)] = std::pow(1.0 + lambda[j], s);
  return scale;
}

std::vector<double> synthesize(const CoeffVector& f, std::span<const double> points) {
  const SpectralBasis& basis = f.basis();
  std::vector<double> out(points.size(), 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!basis.contains(points[i])) {
      std::ostringstream os;
      os << "synthesize: point " << points[i] << " outside the basis domain";
      throw DomainError(os.str());
    }
    double acc = 0.0;
    for (std::size_t m = 0; m < f.size(); ++m)
      if (f[m] != 0.0) acc += f[m] * basis.eval(m, points[i]);
    out[i] = acc;
  }
  return out;
}

Eigen::VectorXd synthesize_on_grid(const CoeffVector& f) {
  return f.basis().grid_table().transpose() * f.coeffs();
}

CoeffVector analyze(const Eigen::VectorXd& values, const BasisPtr& basis) {
  if (values.size() == 0) throw ShapeError("analyze: empty sample vector");
  if (static_cast<std::size_t>(values.size()) != basis->grid().size())
    throw ShapeError("analyze: sample count does not match the basis grid");
  return CoeffVector(basis, basis->quadrature_weight() * (basis->grid_table() * values));
}

CoeffVector analyze(std::span<const double> values, const BasisPtr& basis) {
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  return analyze(v, basis);
}

double inner(const CoeffVector& f, const CoeffVector& g) {
  require_same_basis(f.basis(), g.basis(), "inner");
  return f.coeffs().dot(g.coeffs());
}

double sobolev_norm(const CoeffVector& f, double s) {
  const SobolevScale scale = sobolev_scale(f.basis(), s);
  return std::sqrt((scale.weights.array() * f.coeffs().array().square()).sum());
}

double dual_norm(const CoeffVector& x, double beta) {
  if (beta < 0.0) throw ConfigError("dual_norm: beta must be >= 0 (use sobolev_norm for s > 0)");
  return sobolev_norm(x, -beta);
}

// ---------------------------------------------------------------------------

BumpCutoff::BumpCutoff(Interval support, Interval plateau) : support_(support), plateau_(plateau) {
  const bool ok = 0.0 < support.lo && support.lo < plateau.lo && plateau.lo <= plateau.hi &&
                  plateau.hi < support.hi && support.hi < 1.0;
  if (!ok) throw ConfigError("bump: need 0 < support.lo < plateau.lo <= plateau.hi < support.hi < 1");
}

double BumpCutoff::operator()(double x) const noexcept {
  if (x <= support_.lo || x >= support_.hi) return 0.0;
  if (x >= plateau_.lo && x <= plateau_.hi) return 1.0;
  if (x < plateau_.lo) return smooth_step((x - support_.lo) / (plateau_.lo - support_.lo));
  return smooth_step((support_.hi - x) / (support_.hi - plateau_.hi));
}

BumpCutoff make_bump(Interval support, Interval plateau) { return BumpCutoff(support, plateau); }

CoeffVector multiply_on_grid(const BumpCutoff& zeta, const Eigen::VectorXd& grid_values, const BasisPtr& basis) {
  const auto grid = basis->grid();
  Eigen::VectorXd product(grid_values.size());
  for (Eigen::Index i = 0; i < grid_values.size(); ++i)
    product[i] = zeta(grid[static_cast<std::size_t>(i)]) * grid_values[i];
  return analyze(product, basis);
}

CoeffVector bandlimit_approx(const CoeffVector& f, std::size_t cutoff_freq, const std::optional<BumpCutoff>& zeta) {
  const SpectralBasis& basis = f.basis();
  if (cutoff_freq > basis.n_modes())
    throw ConfigError("bandlimit_approx: cutoff frequency exceeds n_modes");
  Eigen::VectorXd low = f.coeffs();
  for (std::size_t m = 0; m < basis.n_modes(); ++m)
    if (static_cast<std::size_t>(std::abs(basis.frequency(m))) > cutoff_freq)
      low[static_cast<Eigen::Index>(m)] = 0.0;
  CoeffVector projected = f.with(std::move(low));
  if (!zeta) return projected;
  return multiply_on_grid(*zeta, synthesize_on_grid(projected), f.basis_ptr());
}

CoeffVector sobolev_random_draw(const BasisPtr& basis, double alpha, std::uint64_t seed) {
  Eigen::VectorXd g = standard_normal_vector(basis->n_modes(), seed);
  const auto lambda = basis->eigenvalues();
  for (std::size_t j = 0; j < lambda.size(); ++j)
    g[static_cast<Eigen::Index>(j)] *= std::pow(1.0 + lambda[j], -alpha / 2.0 - 0.25 - 0.05);
  CoeffVector draw(basis, std::move(g));
  const double norm = sobolev_norm(draw, alpha);
  if (norm == 0.0) throw NumericalError("sobolev_random_draw: zero draw");
  return (1.0 / norm) * draw;
}

}  // namespace bvm
