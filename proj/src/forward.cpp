#include "bvm/forward.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <boost/math/quadrature/gauss.hpp>

#include "bvm/error.hpp"

namespace bvm {

namespace {

SingularSystem compute_svd(const Eigen::MatrixXd& a) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

}  // namespace

ForwardOperator ForwardOperator::diagonal(BasisPtr basis, Eigen::VectorXd multipliers, double smoothing_order,
                                          OperatorLabel label) {
  if (static_cast<std::size_t>(multipliers.size()) != basis->n_modes())
    throw ShapeError("diagonal operator: multiplier count does not match basis");
  if (!multipliers.allFinite()) throw NumericalError("diagonal operator: non-finite multiplier");

  ForwardOperator op;
  op.basis_ = std::move(basis);
  op.smoothing_order_ = smoothing_order;
  op.label_ = label;
  op.unidentifiable_.assign(static_cast<std::size_t>(multipliers.size()), false);
  for (Eigen::Index j = 0; j < multipliers.size(); ++j) {
    if (std::abs(multipliers[j]) < kUnderflowFloor) {
      if (label != OperatorLabel::Heat)
        throw ConfigError("diagonal operator: zero multiplier (only heat underflow may vanish)");
      multipliers[j] = 0.0;
      op.unidentifiable_[static_cast<std::size_t>(j)] = true;
    }
  }
  op.multipliers_ = std::move(multipliers);
  op.max_singular_ = op.multipliers_.cwiseAbs().maxCoeff();
  op.min_singular_ = op.multipliers_.cwiseAbs().minCoeff();
  return op;
}

ForwardOperator ForwardOperator::dense(BasisPtr basis, Eigen::MatrixXd matrix, double smoothing_order,
                                       OperatorLabel label) {
  const auto n = static_cast<Eigen::Index>(basis->n_modes());
  if (matrix.rows() != n || matrix.cols() != n) throw ShapeError("dense operator: matrix must be n_modes x n_modes");
  if (!matrix.allFinite()) throw NumericalError("dense operator: non-finite entry");

  ForwardOperator op;
  op.basis_ = std::move(basis);
  op.smoothing_order_ = smoothing_order;
  op.label_ = label;
  auto data = std::make_shared<DenseData>();
  data->svd = compute_svd(matrix);
  data->matrix = std::move(matrix);
  op.max_singular_ = data->svd.s[0];
  op.min_singular_ = data->svd.s[n - 1];
  if (!(op.min_singular_ > 0.0)) throw NumericalError("dense operator: matrix is singular (not injective)");
  op.dense_ = std::move(data);
  return op;
}

const Eigen::VectorXd& ForwardOperator::multipliers() const {
  if (!is_diagonal()) throw ConfigError("multipliers() called on a dense operator");
  return multipliers_;
}

const Eigen::MatrixXd& ForwardOperator::matrix() const {
  if (is_diagonal()) throw ConfigError("matrix() called on a diagonal operator");
  return dense_->matrix;
}

Eigen::MatrixXd ForwardOperator::to_dense() const {
  if (is_diagonal()) return multipliers_.asDiagonal();
  return dense_->matrix;
}

bool ForwardOperator::has_unidentifiable_modes() const noexcept {
  return std::any_of(unidentifiable_.begin(), unidentifiable_.end(), [](bool b) { return b; });
}

SingularSystem ForwardOperator::singular_system() const {
  if (!is_diagonal()) return dense_->svd;
  const auto n = multipliers_.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(multipliers_[a]) > std::abs(multipliers_[b]);
  });
  SingularSystem sys{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd(n), Eigen::MatrixXd::Zero(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index j = order[static_cast<std::size_t>(k)];
    sys.s[k] = std::abs(multipliers_[j]);
    sys.v(j, k) = 1.0;
    sys.u(j, k) = multipliers_[j] < 0.0 ? -1.0 : 1.0;
  }
  return sys;
}

// ---------------------------------------------------------------------------

EllipticCoefficient EllipticCoefficient::constant(double value) {
  if (!(value > 0.0)) throw ConfigError("elliptic coefficient: constant must be positive");
  EllipticCoefficient c;
  c.fn_ = [value](double) { return value; };
  c.floor_ = value;
  c.constant_ = true;
  return c;
}

EllipticCoefficient EllipticCoefficient::sinusoidal(double a0, double a1, int freq) {
  if (a1 == 0.0) return constant(a0);
  const double floor = a0 - std::abs(a1);
  if (!(floor > 0.0)) throw ConfigError("elliptic coefficient: a0 - |a1| must be positive (uniform ellipticity)");
  EllipticCoefficient c;
  c.fn_ = [a0, a1, freq](double x) { return a0 + a1 * std::sin(2.0 * std::numbers::pi * freq * x); };
  c.floor_ = floor;
  return c;
}

EllipticCoefficient EllipticCoefficient::custom(std::function<double(double)> a, double floor) {
  if (!(floor > 0.0)) throw ConfigError("elliptic coefficient: ellipticity floor must be positive");
  EllipticCoefficient c;
  c.fn_ = std::move(a);
  c.floor_ = floor;
  return c;
}

ForwardOperator identity_operator(const BasisPtr& basis) {
  return ForwardOperator::diagonal(basis, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(basis->n_modes())), 0.0,
                                   OperatorLabel::Identity);
}

ForwardOperator psido_multiplier(const BasisPtr& basis, double t) {
  if (basis->kind() != BasisKind::FourierTorus)
    throw ConfigError("psido_multiplier: requires a FourierTorus basis");
  Eigen::VectorXd a(static_cast<Eigen::Index>(basis->n_modes()));
  const auto lambda = basis->eigenvalues();
  for (std::size_t k = 0; k < lambda.size(); ++k) a[static_cast<Eigen::Index>(k)] = std::pow(1.0 + lambda[k], -t / 2.0);
  return ForwardOperator::diagonal(basis, std::move(a), t, OperatorLabel::Psido);
}

EllipticPair elliptic_operator(const EllipticCoefficient& coeff, const BasisPtr& basis) {
  if (basis->kind() != BasisKind::DirichletSine)
    throw ConfigError("elliptic_operator: requires a DirichletSine basis");
  const auto n = static_cast<Eigen::Index>(basis->n_modes());
  const auto grid = basis->grid();

  Eigen::VectorXd a_on_grid(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = coeff(grid[i]);
    if (!(v >= coeff.floor())) {
      std::ostringstream os;
      os << "elliptic_operator: a(" << grid[i] << ") = " << v << " violates the ellipticity floor " << coeff.floor();
      throw ConfigError(os.str());
    }
    a_on_grid[static_cast<Eigen::Index>(i)] = v;
  }

  ForwardOperator L;
  ForwardOperator L_inv;
  if (coeff.is_constant()) {
    const double c = a_on_grid[0];
    Eigen::VectorXd lambda = Eigen::Map<const Eigen::VectorXd>(basis->eigenvalues().data(), n);
    L = ForwardOperator::diagonal(basis, c * lambda, -2.0, OperatorLabel::Custom);
    L_inv = ForwardOperator::diagonal(basis, (c * lambda).cwiseInverse(), 2.0, OperatorLabel::EllipticBVP);
  } else {
    // Composite 8-point Gauss-Legendre, about one half-wave of the highest
    // derivative product per panel. The basis grid (midpoint rule) is only
    // second order here because the integrand is not periodic.
    using rule = boost::math::quadrature::gauss<double, 8>;
    const auto panels = 2 * n + 8;
    std::vector<double> nodes;
    std::vector<double> weights;
    nodes.reserve(static_cast<std::size_t>(panels) * 8);
    weights.reserve(nodes.capacity());
    const double h = 1.0 / static_cast<double>(panels);
    for (Eigen::Index p = 0; p < panels; ++p) {
      const double mid = (static_cast<double>(p) + 0.5) * h;
      for (std::size_t k = 0; k < rule::abscissa().size(); ++k) {
        const double x = rule::abscissa()[k];
        const double w = rule::weights()[k] * 0.5 * h;
        nodes.push_back(mid + 0.5 * h * x);
        weights.push_back(w);
        if (x != 0.0) {
          nodes.push_back(mid - 0.5 * h * x);
          weights.push_back(w);
        }
      }
    }
    const auto m = static_cast<Eigen::Index>(nodes.size());
    Eigen::VectorXd aw(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double v = coeff(nodes[static_cast<std::size_t>(i)]);
      if (!(v >= coeff.floor())) {
        std::ostringstream os;
        os << "elliptic_operator: a(" << nodes[static_cast<std::size_t>(i)] << ") = " << v
           << " violates the ellipticity floor " << coeff.floor();
        throw ConfigError(os.str());
      }
      aw[i] = v * weights[static_cast<std::size_t>(i)];
    }
    Eigen::MatrixXd d(n, m);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < m; ++i)
        d(j, i) = basis->eval_derivative(static_cast<std::size_t>(j), nodes[static_cast<std::size_t>(i)]);
    Eigen::MatrixXd weighted = d * aw.asDiagonal();
    Eigen::MatrixXd galerkin = weighted * d.transpose();

    Eigen::LLT<Eigen::MatrixXd> llt(galerkin);
    if (llt.info() != Eigen::Success) throw NumericalError("elliptic_operator: Galerkin matrix is not positive definite");
    Eigen::MatrixXd inverse = llt.solve(Eigen::MatrixXd::Identity(n, n));
    L = ForwardOperator::dense(basis, std::move(galerkin), -2.0, OperatorLabel::Custom);
    L_inv = ForwardOperator::dense(basis, std::move(inverse), 2.0, OperatorLabel::EllipticBVP);
  }
  L_inv.differential_ = std::make_shared<const ForwardOperator>(L);
  return {std::move(L), std::move(L_inv)};
}

ForwardOperator heat_semigroup(const BasisPtr& basis, double T) {
  if (basis->kind() != BasisKind::DirichletSine) throw ConfigError("heat_semigroup: requires a DirichletSine basis");
  if (!(T >= 0.0)) throw ConfigError("heat_semigroup: T must be >= 0");
  Eigen::VectorXd a(static_cast<Eigen::Index>(basis->n_modes()));
  const auto lambda = basis->eigenvalues();
  for (std::size_t j = 0; j < lambda.size(); ++j) a[static_cast<Eigen::Index>(j)] = std::exp(-lambda[j] * T);
  return ForwardOperator::diagonal(basis, std::move(a), std::numeric_limits<double>::infinity(), OperatorLabel::Heat);
}

CoeffVector apply(const ForwardOperator& op, const CoeffVector& f) {
  require_same_basis(op.basis(), f.basis(), "apply");
  if (op.is_diagonal()) return f.with(op.multipliers().cwiseProduct(f.coeffs()));
  return f.with(op.matrix() * f.coeffs());
}

CoeffVector adjoint_apply(const ForwardOperator& op, const CoeffVector& g) {
  require_same_basis(op.basis(), g.basis(), "adjoint_apply");
  if (op.is_diagonal()) return g.with(op.multipliers().cwiseProduct(g.coeffs()));
  return g.with(op.matrix().transpose() * g.coeffs());
}

CoeffVector fisher_solve(const ForwardOperator& op, const CoeffVector& psi, double cond_limit) {
  require_same_basis(op.basis(), psi.basis(), "fisher_solve");
  if (!(cond_limit > 0.0)) throw ConfigError("fisher_solve: cond_limit must be positive");
  const double top = op.max_singular_value() * op.max_singular_value();

  auto check = [&](double s2, Eigen::Index where) {
    if (s2 == 0.0 || top / s2 > cond_limit) {
      std::ostringstream os;
      os << "fisher_solve: psi has mass on direction " << where << " where A*A has condition "
         << (s2 == 0.0 ? std::numeric_limits<double>::infinity() : top / s2) << " > " << cond_limit
         << " (outside the resolvable range of A*A)";
      throw IllPosedError(os.str());
    }
  };

  if (op.is_diagonal()) {
    const Eigen::VectorXd& a = op.multipliers();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(a.size());
    for (Eigen::Index j = 0; j < a.size(); ++j) {
      if (psi.coeffs()[j] == 0.0) continue;
      const double s2 = a[j] * a[j];
      check(s2, j);
      out[j] = psi.coeffs()[j] / s2;
    }
    return psi.with(std::move(out));
  }

  const SingularSystem svd = op.singular_system();
  const Eigen::VectorXd proj = svd.v.transpose() * psi.coeffs();
  const double scale = psi.coeffs().norm();
  Eigen::VectorXd weighted = Eigen::VectorXd::Zero(proj.size());
  for (Eigen::Index k = 0; k < proj.size(); ++k) {
    if (std::abs(proj[k]) <= 1e-14 * scale) continue;
    const double s2 = svd.s[k] * svd.s[k];
    check(s2, k);
    weighted[k] = proj[k] / s2;
  }
  return psi.with(svd.v * weighted);
}

double smoothing_constant(const ForwardOperator& op, double ambient_exponent) {
  const SobolevScale scale = sobolev_scale(op.basis(), -ambient_exponent / 2.0);
  if (op.is_diagonal()) return op.multipliers().cwiseAbs().cwiseProduct(scale.weights).maxCoeff();
  Eigen::MatrixXd scaled = op.matrix() * scale.weights.asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled);
  return svd.singularValues()[0];
}

}  // namespace bvm
