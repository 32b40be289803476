#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bvm/error.hpp"
#include "bvm/forward.hpp"
#include "bvm/random.hpp"

using namespace bvm;
using std::numbers::pi;

namespace {

CoeffVector random_coeffs(const BasisPtr& b, std::uint64_t seed, std::size_t band = 0) {
  Eigen::VectorXd c = standard_normal_vector(b->n_modes(), seed);
  if (band) c.tail(c.size() - static_cast<Eigen::Index>(band)).setZero();
  return CoeffVector(b, c);
}

double rel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).norm() / std::max(1e-300, b.norm()); }

struct Families {
  BasisPtr sine = build_basis(BasisKind::DirichletSine, 64);
  BasisPtr torus = build_basis(BasisKind::FourierTorus, 65);
  ForwardOperator psido = psido_multiplier(torus, 2.0);
  EllipticPair flat = elliptic_operator(EllipticCoefficient::constant(1.0), sine);
  EllipticPair wavy = elliptic_operator(EllipticCoefficient::sinusoidal(1.0, 0.5, 1), sine);
  ForwardOperator heat = heat_semigroup(sine, 0.01);
};

}  // namespace

TEST_SUITE("forward") {

TEST_CASE("psido multipliers") {
  const BasisPtr t = build_basis(BasisKind::FourierTorus, 9);
  const ForwardOperator id = psido_multiplier(t, 0.0);
  CHECK((id.multipliers().array() == 1.0).all());
  const ForwardOperator a = psido_multiplier(t, 2.0);
  CHECK(a.multipliers()[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(a.multipliers()[2] == doctest::Approx(0.5).epsilon(1e-15));
  for (Eigen::Index m = 1; m < 9; ++m) CHECK(a.multipliers()[m] <= a.multipliers()[m - 1]);
  CHECK(a.smoothing_order() == 2.0);
  CHECK(a.label() == OperatorLabel::Psido);
  CHECK_THROWS_AS((void)psido_multiplier(build_basis(BasisKind::DirichletSine, 8), 1.0), ConfigError);
}

TEST_CASE("elliptic operator with constant coefficient") {
  const BasisPtr b = build_basis(BasisKind::DirichletSine, 16);
  const EllipticPair p = elliptic_operator(EllipticCoefficient::constant(1.0), b);
  CHECK(p.L_inv.is_diagonal());
  const CoeffVector y = apply(p.L_inv, CoeffVector::unit(b, 0));
  CHECK(y[0] == doctest::Approx(1.0 / (pi * pi)).epsilon(1e-15));
  CHECK(p.L_inv.smoothing_order() == 2.0);
  CHECK(p.L_inv.label() == OperatorLabel::EllipticBVP);
  CHECK(p.L_inv.differential_operator() != nullptr);
  CHECK_THROWS_AS((void)elliptic_operator(EllipticCoefficient::constant(1.0), build_basis(BasisKind::FourierTorus, 9)),
                  ConfigError);
}

TEST_CASE("Galerkin matrix for a variable coefficient") {
  const BasisPtr b = build_basis(BasisKind::DirichletSine, 64);
  const EllipticPair p = elliptic_operator(EllipticCoefficient::sinusoidal(1.0, 0.5, 1), b);
  REQUIRE_FALSE(p.L.is_diagonal());
  const Eigen::MatrixXd& L = p.L.matrix();
  CHECK((L - L.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * L.cwiseAbs().maxCoeff());
  const Eigen::MatrixXd& Li = p.L_inv.matrix();
  CHECK((Li - Li.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * Li.cwiseAbs().maxCoeff());

  // Independent oracle: entry (i,j) = int a phi_i' phi_j' by a fine midpoint rule.
  constexpr int fine = 20000;
  for (auto [i, j] : {std::pair{0, 0}, std::pair{0, 1}, std::pair{2, 5}, std::pair{10, 12}}) {
    double s = 0.0;
    for (int k = 0; k < fine; ++k) {
      const double x = (k + 0.5) / fine;
      const double a = 1.0 + 0.5 * std::sin(2 * pi * x);
      s += a * 2.0 * pi * pi * (i + 1) * (j + 1) * std::cos(pi * (i + 1) * x) * std::cos(pi * (j + 1) * x);
    }
    CHECK(L(i, j) == doctest::Approx(s / fine).epsilon(1e-6).scale(1.0));
  }

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const CoeffVector f = random_coeffs(b, seed, 40);
    CHECK(rel(apply(p.L_inv, apply(p.L, f)).coeffs(), f.coeffs()) <= 1e-8);
  }
}

TEST_CASE("ellipticity floor") {
  const BasisPtr b = build_basis(BasisKind::DirichletSine, 16);
  CHECK_THROWS_AS((void)elliptic_operator(EllipticCoefficient::sinusoidal(1.0, 1.2, 1), b), ConfigError);
  CHECK_THROWS_AS((void)elliptic_operator(EllipticCoefficient::constant(-1.0), b), ConfigError);
  CHECK_THROWS_AS((void)elliptic_operator(EllipticCoefficient::custom([](double x) { return x - 0.5; }, 0.1), b),
                  ConfigError);
}

TEST_CASE("heat semigroup") {
  const BasisPtr b = build_basis(BasisKind::DirichletSine, 256);
  const ForwardOperator id = heat_semigroup(b, 0.0);
  CHECK((id.multipliers().array() == 1.0).all());
  const ForwardOperator h = heat_semigroup(b, 0.1);
  CHECK(h.multipliers()[0] == doctest::Approx(0.372708).epsilon(1e-6));
  CHECK(h.multipliers()[0] == doctest::Approx(std::exp(-pi * pi * 0.1)).epsilon(1e-15));
  Eigen::Index nz = 0;
  for (Eigen::Index j = 1; j < 256; ++j) {
    if (h.multipliers()[j] > 0.0) {
      CHECK(h.multipliers()[j] < h.multipliers()[j - 1]);
      ++nz;
    }
  }
  CHECK(std::isinf(h.smoothing_order()));
  // exp(-lambda_j T) < 1e-300 from j = 27 on (pi^2 j^2 0.1 > 690.8).
  CHECK(h.has_unidentifiable_modes());
  CHECK(h.unidentifiable()[25] == false);
  CHECK(h.unidentifiable()[26] == true);
  CHECK(h.multipliers()[26] == 0.0);
  CHECK_THROWS_AS((void)heat_semigroup(b, -1.0), ConfigError);
}

TEST_CASE("zero multipliers are rejected outside the heat label") {
  const BasisPtr b = build_basis(BasisKind::DirichletSine, 4);
  Eigen::VectorXd m(4);
  m << 1, 0.5, 0.0, 0.25;
  CHECK_THROWS_AS((void)ForwardOperator::diagonal(b, m, 0.0, OperatorLabel::Custom), ConfigError);
  CHECK_NOTHROW((void)ForwardOperator::diagonal(b, m, 0.0, OperatorLabel::Heat));
}

TEST_CASE("apply: diagonal action, linearity and dense equivalence") {
  Families f;
  const CoeffVector e3 = CoeffVector::unit(f.torus, 3);
  CHECK(apply(f.psido, e3).coeffs() == (f.psido.multipliers()[3] * e3.coeffs()));
  const CoeffVector x = random_coeffs(f.sine, 1);
  const CoeffVector y = random_coeffs(f.sine, 2);
  const CoeffVector lhs = apply(f.wavy.L_inv, 2.0 * x + (-3.0) * y);
  const CoeffVector rhs = 2.0 * apply(f.wavy.L_inv, x) + (-3.0) * apply(f.wavy.L_inv, y);
  CHECK((lhs.coeffs() - rhs.coeffs()).cwiseAbs().maxCoeff() <= 1e-12 * rhs.coeffs().cwiseAbs().maxCoeff());

  for (const ForwardOperator* op : {&f.flat.L_inv, &f.psido}) {
    const ForwardOperator dense =
        ForwardOperator::dense(op->basis_ptr(), op->to_dense(), op->smoothing_order(), OperatorLabel::Custom);
    const CoeffVector v = random_coeffs(op->basis_ptr(), 3);
    CHECK((apply(dense, v).coeffs() - apply(*op, v).coeffs()).cwiseAbs().maxCoeff() <= 1e-12);
  }
  CHECK_THROWS_AS((void)apply(f.psido, x), ShapeError);
}

TEST_CASE("adjoint identities") {
  Families f;
  for (const ForwardOperator* op : {&f.psido, &f.flat.L_inv, &f.wavy.L_inv, &f.heat}) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const CoeffVector x = random_coeffs(op->basis_ptr(), 2 * seed);
      const CoeffVector y = random_coeffs(op->basis_ptr(), 2 * seed + 1);
      CHECK(std::abs(inner(apply(*op, x), y) - inner(x, adjoint_apply(*op, y))) <= 1e-10);
    }
  }
  // L itself is unbounded (norm ~ lambda_max), so compare relative to the scale of the products.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const CoeffVector x = random_coeffs(f.sine, seed);
    const CoeffVector y = random_coeffs(f.sine, seed + 1000);
    const double scale = f.wavy.L.max_singular_value() * x.coeffs().norm() * y.coeffs().norm();
    CHECK(std::abs(inner(apply(f.wavy.L, x), y) - inner(x, adjoint_apply(f.wavy.L, y))) <= 1e-14 * scale);
  }
  const CoeffVector g = random_coeffs(f.torus, 7);
  CHECK(adjoint_apply(f.psido, g).coeffs() == apply(f.psido, g).coeffs());
  const CoeffVector h = random_coeffs(f.sine, 7);
  CHECK((adjoint_apply(f.wavy.L_inv, h).coeffs() - apply(f.wavy.L_inv, h).coeffs()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("solution operator is self-adjoint") {
  Families f;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const CoeffVector x = random_coeffs(f.sine, seed);
    const CoeffVector y = random_coeffs(f.sine, seed + 50);
    CHECK(std::abs(inner(apply(f.wavy.L_inv, x), y) - inner(x, apply(f.wavy.L_inv, y))) <= 1e-10);
  }
}

TEST_CASE("smoothing estimate with a calibrated constant") {
  Families f;
  const double c = smoothing_constant(f.flat.L_inv, -2.0);
  CHECK(c == doctest::Approx((1.0 + pi * pi) / (pi * pi)).epsilon(1e-12));
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const CoeffVector x = random_coeffs(f.sine, seed);
    CHECK(sobolev_norm(apply(f.flat.L_inv, x), 0.0) <= c * sobolev_norm(x, -2.0) * (1 + 1e-12));
    CHECK(sobolev_norm(apply(f.wavy.L_inv, x), 0.0) <= 10.0 * c * sobolev_norm(x, -2.0));
  }
}

TEST_CASE("fisher solve") {
  Families f;
  const CoeffVector e1 = CoeffVector::unit(f.sine, 0);
  const CoeffVector s = fisher_solve(f.flat.L_inv, e1);
  CHECK(s[0] == doctest::Approx(std::pow(pi, 4)).epsilon(1e-13));
  const ForwardOperator id = identity_operator(f.sine);
  const CoeffVector x = random_coeffs(f.sine, 5);
  CHECK(fisher_solve(id, x).coeffs() == x.coeffs());

  const BasisPtr big = build_basis(BasisKind::DirichletSine, 256);
  const ForwardOperator heat = heat_semigroup(big, 0.1);
  CHECK_THROWS_AS((void)fisher_solve(heat, CoeffVector::unit(big, 39), 1e12), IllPosedError);
  CHECK_THROWS_AS((void)fisher_solve(heat, CoeffVector::unit(big, 5), 1e12), IllPosedError);
  CHECK_NOTHROW((void)fisher_solve(heat, CoeffVector::unit(big, 0), 1e6));

  for (const ForwardOperator* op : {&f.psido, &f.flat.L_inv, &f.wavy.L_inv}) {
    const CoeffVector psi = random_coeffs(op->basis_ptr(), 9, 8);
    const CoeffVector sol = fisher_solve(*op, psi);
    const CoeffVector back = adjoint_apply(*op, apply(*op, sol));
    CHECK(rel(back.coeffs(), psi.coeffs()) <= 1e-8);
  }
}

}  // TEST_SUITE
