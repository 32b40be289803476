#pragma once

// Spectral bases on the unit torus and the unit interval, coefficient
// vectors, Sobolev scales, smooth cutoffs and band-limit approximation.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace bvm {

enum class BasisKind { FourierTorus, DirichletSine };

/// Orthonormal eigenbasis of -d^2/dx^2 together with an oversampled
/// quadrature grid.
///
/// FourierTorus on [0,1): mode 0 is the constant, mode 2k-1 is sqrt(2)cos(2 pi k x)
/// and mode 2k is sqrt(2)sin(2 pi k x); eigenvalue lambda = k^2. The mode count
/// is odd. Trapezoid rule on x_m = m/N.
///
/// DirichletSine on (0,1): mode j-1 is sqrt(2)sin(pi j x), lambda = (pi j)^2.
/// Midpoint rule on x_m = (m + 1/2)/N.
///
/// Both rules integrate products of two basis functions exactly because
/// N >= 4 n_modes.
class SpectralBasis {
 public:
  SpectralBasis(BasisKind kind, std::size_t n_modes, std::size_t oversample);

  [[nodiscard]] BasisKind kind() const noexcept { return kind_; }
  [[nodiscard]] std::size_t n_modes() const noexcept { return n_modes_; }
  [[nodiscard]] std::size_t oversample() const noexcept { return oversample_; }
  [[nodiscard]] std::span<const double> eigenvalues() const noexcept { return eigenvalues_; }
  [[nodiscard]] std::span<const double> grid() const noexcept { return grid_; }
  [[nodiscard]] double quadrature_weight() const noexcept { return 1.0 / static_cast<double>(grid_.size()); }

  /// Signed frequency of a mode: torus cos modes +k, sin modes -k; sine
  /// modes j (1-based).
  [[nodiscard]] int frequency(std::size_t mode) const;

  [[nodiscard]] bool contains(double x) const noexcept;
  [[nodiscard]] double eval(std::size_t mode, double x) const;
  [[nodiscard]] double eval_derivative(std::size_t mode, double x) const;

  /// Basis functions on the grid, n_modes x grid_size.
  [[nodiscard]] const Eigen::MatrixXd& grid_table() const noexcept { return table_; }

  [[nodiscard]] bool same_space(const SpectralBasis& other) const noexcept {
    return kind_ == other.kind_ && n_modes_ == other.n_modes_;
  }

 private:
  BasisKind kind_;
  std::size_t n_modes_;
  std::size_t oversample_;
  std::vector<double> eigenvalues_;
  std::vector<double> grid_;
  Eigen::MatrixXd table_;
};

using BasisPtr = std::shared_ptr<const SpectralBasis>;

/// Throws ConfigError for n_modes == 0 or oversample < 4 (and for an even
/// torus mode count).
[[nodiscard]] BasisPtr build_basis(BasisKind kind, std::size_t n_modes, std::size_t oversample = 8);

/// A function expanded in a fixed spectral basis.
class CoeffVector {
 public:
  CoeffVector(BasisPtr basis, Eigen::VectorXd coeffs);

  static CoeffVector zeros(BasisPtr basis);
  /// Unit vector on the given 0-based mode.
  static CoeffVector unit(BasisPtr basis, std::size_t mode);

  [[nodiscard]] const BasisPtr& basis_ptr() const noexcept { return basis_; }
  [[nodiscard]] const SpectralBasis& basis() const noexcept { return *basis_; }
  [[nodiscard]] const Eigen::VectorXd& coeffs() const noexcept { return coeffs_; }
  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(coeffs_.size()); }
  [[nodiscard]] double operator[](std::size_t i) const { return coeffs_[static_cast<Eigen::Index>(i)]; }

  /// Same basis, new coefficients (validated).
  [[nodiscard]] CoeffVector with(Eigen::VectorXd coeffs) const { return CoeffVector(basis_, std::move(coeffs)); }

  friend CoeffVector operator+(const CoeffVector& a, const CoeffVector& b);
  friend CoeffVector operator-(const CoeffVector& a, const CoeffVector& b);
  friend CoeffVector operator*(double s, const CoeffVector& a);

 private:
  BasisPtr basis_;
  Eigen::VectorXd coeffs_;
};

/// Throws ShapeError unless both vectors live on the same basis.
void require_same_basis(const SpectralBasis& a, const SpectralBasis& b, const char* where);

/// Weights w_j = (1 + lambda_j)^s.
struct SobolevScale {
  double exponent = 0.0;
  Eigen::VectorXd weights;
};

[[nodiscard]] SobolevScale sobolev_scale(const SpectralBasis& basis, double s);

[[nodiscard]] std::vector<double> synthesize(const CoeffVector& f, std::span<const double> points);
/// Samples of f on basis.grid().
[[nodiscard]] Eigen::VectorXd synthesize_on_grid(const CoeffVector& f);
[[nodiscard]] CoeffVector analyze(std::span<const double> values, const BasisPtr& basis);
[[nodiscard]] CoeffVector analyze(const Eigen::VectorXd& values, const BasisPtr& basis);

[[nodiscard]] double inner(const CoeffVector& f, const CoeffVector& g);
[[nodiscard]] double sobolev_norm(const CoeffVector& f, double s);
/// Surrogate for the dual of H^beta_K: Sobolev norm with exponent -beta.
[[nodiscard]] double dual_norm(const CoeffVector& x, double beta);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// C-infinity cutoff: 1 on the plateau, 0 outside the support, built from
/// the exp(-1/t) smooth step.
class BumpCutoff {
 public:
  BumpCutoff(Interval support, Interval plateau);

  [[nodiscard]] double operator()(double x) const noexcept;
  [[nodiscard]] Interval support() const noexcept { return support_; }
  [[nodiscard]] Interval plateau() const noexcept { return plateau_; }

 private:
  Interval support_;
  Interval plateau_;
};

[[nodiscard]] BumpCutoff make_bump(Interval support, Interval plateau);

/// Low-pass projection onto modes with |frequency| <= cutoff_freq, then
/// (when zeta is given) grid multiplication by zeta and re-analysis.
[[nodiscard]] CoeffVector bandlimit_approx(const CoeffVector& f, std::size_t cutoff_freq,
                                           const std::optional<BumpCutoff>& zeta = std::nullopt);

/// Random H^alpha member: c_j = (1+lambda_j)^(-alpha/2 - 1/4 - 0.05) g_j with g
/// i.i.d. standard normal, rescaled to unit H^alpha norm.
[[nodiscard]] CoeffVector sobolev_random_draw(const BasisPtr& basis, double alpha, std::uint64_t seed);

/// Coefficients of zeta(x) * g(x), g given on the grid.
[[nodiscard]] CoeffVector multiply_on_grid(const BumpCutoff& zeta, const Eigen::VectorXd& grid_values,
                                           const BasisPtr& basis);

}  // namespace bvm
