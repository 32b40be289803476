#pragma once

// Forward maps on coefficient space: torus pseudo-differential multiplier,
// elliptic Dirichlet problem (L and its solution operator), heat semigroup.

#include <functional>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bvm/spectral.hpp"

namespace bvm {

class EllipticCoefficient;
struct EllipticPair;

enum class OperatorLabel { Psido, EllipticBVP, Heat, Identity, Custom };

inline constexpr double kDefaultCondLimit = 1e12;
/// Heat multipliers below this are stored as zero and flagged.
inline constexpr double kUnderflowFloor = 1e-300;

/// Singular system A = U diag(s) V^T, singular values descending.
struct SingularSystem {
  Eigen::MatrixXd u;
  Eigen::VectorXd s;
  Eigen::MatrixXd v;
};

class ForwardOperator {
 public:
  static ForwardOperator diagonal(BasisPtr basis, Eigen::VectorXd multipliers, double smoothing_order,
                                  OperatorLabel label);
  static ForwardOperator dense(BasisPtr basis, Eigen::MatrixXd matrix, double smoothing_order,
                               OperatorLabel label);

  [[nodiscard]] const BasisPtr& basis_ptr() const noexcept { return basis_; }
  [[nodiscard]] const SpectralBasis& basis() const noexcept { return *basis_; }
  [[nodiscard]] bool is_diagonal() const noexcept { return dense_ == nullptr; }
  [[nodiscard]] const Eigen::VectorXd& multipliers() const;
  [[nodiscard]] const Eigen::MatrixXd& matrix() const;
  /// Dense copy regardless of representation.
  [[nodiscard]] Eigen::MatrixXd to_dense() const;
  [[nodiscard]] double smoothing_order() const noexcept { return smoothing_order_; }
  [[nodiscard]] OperatorLabel label() const noexcept { return label_; }
  [[nodiscard]] double min_singular_value() const noexcept { return min_singular_; }
  [[nodiscard]] double max_singular_value() const noexcept { return max_singular_; }
  /// Modes whose multiplier underflowed (Diagonal only; empty otherwise).
  [[nodiscard]] const std::vector<bool>& unidentifiable() const noexcept { return unidentifiable_; }
  [[nodiscard]] bool has_unidentifiable_modes() const noexcept;

  /// Singular system, computed at construction for Dense and on demand
  /// (by permutation) for Diagonal.
  [[nodiscard]] SingularSystem singular_system() const;

  /// For the elliptic solution operator: the differential operator L it inverts.
  [[nodiscard]] const ForwardOperator* differential_operator() const noexcept { return differential_.get(); }

 private:
  ForwardOperator() = default;
  friend EllipticPair elliptic_operator(const EllipticCoefficient& coeff, const BasisPtr& basis);

  struct DenseData {
    Eigen::MatrixXd matrix;
    SingularSystem svd;
  };

  BasisPtr basis_;
  Eigen::VectorXd multipliers_;
  std::shared_ptr<const DenseData> dense_;
  double smoothing_order_ = 0.0;
  OperatorLabel label_ = OperatorLabel::Custom;
  double min_singular_ = 0.0;
  double max_singular_ = 0.0;
  std::vector<bool> unidentifiable_;
  std::shared_ptr<const ForwardOperator> differential_;
};

/// Smooth uniformly positive diffusion coefficient a(x) on [0,1].
class EllipticCoefficient {
 public:
  /// a(x) = value everywhere; assembles to a diagonal operator.
  static EllipticCoefficient constant(double value);
  /// a(x) = a0 + a1 sin(2 pi freq x).
  static EllipticCoefficient sinusoidal(double a0, double a1, int freq);
  /// General coefficient; `floor` is the ellipticity floor checked on the grid.
  static EllipticCoefficient custom(std::function<double(double)> a, double floor);

  [[nodiscard]] double operator()(double x) const { return fn_(x); }
  [[nodiscard]] double floor() const noexcept { return floor_; }
  [[nodiscard]] bool is_constant() const noexcept { return constant_; }

 private:
  std::function<double(double)> fn_;
  double floor_ = 0.0;
  bool constant_ = false;
};

[[nodiscard]] ForwardOperator identity_operator(const BasisPtr& basis);
[[nodiscard]] ForwardOperator psido_multiplier(const BasisPtr& basis, double t);

struct EllipticPair {
  ForwardOperator L;
  ForwardOperator L_inv;
};

/// Galerkin matrix L_ij = int a phi_i' phi_j' and its inverse. L_inv keeps a
/// handle to L (see ForwardOperator::differential_operator).
[[nodiscard]] EllipticPair elliptic_operator(const EllipticCoefficient& coeff, const BasisPtr& basis);

[[nodiscard]] ForwardOperator heat_semigroup(const BasisPtr& basis, double T);

[[nodiscard]] CoeffVector apply(const ForwardOperator& op, const CoeffVector& f);
[[nodiscard]] CoeffVector adjoint_apply(const ForwardOperator& op, const CoeffVector& g);

/// (A*A)^{-1} psi. Throws IllPosedError when psi has mass on an unidentifiable
/// direction or when (s_max / s_min(occupied))^2 exceeds cond_limit.
[[nodiscard]] CoeffVector fisher_solve(const ForwardOperator& op, const CoeffVector& psi,
                                       double cond_limit = kDefaultCondLimit);

/// Smallest c with ||A f||_{L2} <= c ||f||_{H^s} on the truncated space,
/// i.e. the spectral norm of A diag((1+lambda)^{-s/2}).
[[nodiscard]] double smoothing_constant(const ForwardOperator& op, double ambient_exponent);

}  // namespace bvm
