#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "bvm/error.hpp"
#include "bvm/random.hpp"
#include "bvm/spectral.hpp"

using namespace bvm;
using std::numbers::pi;

namespace {

CoeffVector random_bandlimited(const BasisPtr& b, std::size_t band, std::uint64_t seed) {
  Eigen::VectorXd c = standard_normal_vector(b->n_modes(), seed);
  c.tail(c.size() - static_cast<Eigen::Index>(band)).setZero();
  return CoeffVector(b, c);
}

double grid_quadrature(const Eigen::VectorXd& v, const SpectralBasis& b) {
  return v.sum() * b.quadrature_weight();
}

}  // namespace

TEST_SUITE("spectral") {

TEST_CASE("dirichlet eigenvalues are (pi j)^2") {
  const BasisPtr b = build_basis(BasisKind::DirichletSine, 4, 4);
  const auto lam = b->eigenvalues();
  REQUIRE(lam.size() == 4);
  for (std::size_t j = 0; j < 4; ++j) CHECK(lam[j] == doctest::Approx(pi * pi * double((j + 1) * (j + 1))).epsilon(1e-15));
  CHECK(b->grid().size() == 16);
}

TEST_CASE("torus frequencies and eigenvalues") {
  const BasisPtr b = build_basis(BasisKind::FourierTorus, 5, 4);
  const std::vector<double> expect{0, 1, 1, 4, 4};
  for (std::size_t m = 0; m < 5; ++m) CHECK(b->eigenvalues()[m] == expect[m]);
  std::vector<int> freqs;
  for (std::size_t m = 0; m < 5; ++m) freqs.push_back(std::abs(b->frequency(m)));
  CHECK(freqs == std::vector<int>{0, 1, 1, 2, 2});
}

TEST_CASE("basis construction errors") {
  CHECK_THROWS_AS((void)build_basis(BasisKind::DirichletSine, 0, 4), ConfigError);
  CHECK_THROWS_AS((void)build_basis(BasisKind::DirichletSine, 8, 3), ConfigError);
  CHECK_THROWS_AS((void)build_basis(BasisKind::FourierTorus, 4, 8), ConfigError);
}

TEST_CASE("eigenvalues strictly increasing on the interval") {
  const BasisPtr b = build_basis(BasisKind::DirichletSine, 64);
  for (std::size_t j = 1; j < 64; ++j) CHECK(b->eigenvalues()[j] > b->eigenvalues()[j - 1]);
  CHECK(b->grid().size() >= 4 * 64);
}

TEST_CASE("synthesize e_1 at the midpoint") {
  const BasisPtr b = build_basis(BasisKind::DirichletSine, 8);
  const std::vector<double> x{0.5};
  CHECK(synthesize(CoeffVector::unit(b, 0), x)[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  const std::vector<double> many{0.0, 0.1, 0.7, 1.0};
  for (double v : synthesize(CoeffVector::zeros(b), many)) CHECK(v == 0.0);
  const std::vector<double> outside{1.5};
  CHECK_THROWS_AS((void)synthesize(CoeffVector::unit(b, 0), outside), DomainError);
  const BasisPtr t = build_basis(BasisKind::FourierTorus, 9);
  const std::vector<double> one{1.0};
  CHECK_THROWS_AS((void)synthesize(CoeffVector::unit(t, 0), one), DomainError);
}

TEST_CASE("analyze inverts synthesize for band-limited functions") {
  for (BasisKind kind : {BasisKind::DirichletSine, BasisKind::FourierTorus}) {
    const BasisPtr b = build_basis(kind, 33);
    const CoeffVector f = random_bandlimited(b, 33, 11);
    const CoeffVector back = analyze(synthesize_on_grid(f), b);
    CHECK((back.coeffs() - f.coeffs()).norm() <= 1e-8 * f.coeffs().norm());
  }
}

TEST_CASE("analyze of known samples") {
  const BasisPtr t = build_basis(BasisKind::FourierTorus, 9);
  const CoeffVector one = analyze(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(t->grid().size())), t);
  CHECK(one[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(one.coeffs().tail(8).cwiseAbs().maxCoeff() < 1e-14);

  const BasisPtr s = build_basis(BasisKind::DirichletSine, 16);
  Eigen::VectorXd v(static_cast<Eigen::Index>(s->grid().size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = std::sqrt(2.0) * std::sin(pi * s->grid()[static_cast<std::size_t>(i)]);
  const CoeffVector e1 = analyze(v, s);
  CHECK((e1.coeffs() - CoeffVector::unit(s, 0).coeffs()).norm() < 1e-8);

  CHECK_THROWS_AS((void)analyze(Eigen::VectorXd(), s), ShapeError);
  CHECK_THROWS_AS((void)analyze(Eigen::VectorXd::Ones(7), s), ShapeError);
}

TEST_CASE("coefficient vectors validate length and finiteness") {
  const BasisPtr b = build_basis(BasisKind::DirichletSine, 8);
  CHECK_THROWS_AS(CoeffVector(b, Eigen::VectorXd::Zero(7)), ShapeError);
  Eigen::VectorXd bad = Eigen::VectorXd::Zero(8);
  bad[3] = std::nan("");
  CHECK_THROWS_AS(CoeffVector(b, bad), NumericalError);
}

TEST_CASE("inner products and Parseval") {
  const BasisPtr b = build_basis(BasisKind::DirichletSine, 32);
  CHECK(inner(CoeffVector::unit(b, 0), CoeffVector::unit(b, 0)) == 1.0);
  CHECK(inner(CoeffVector::unit(b, 0), CoeffVector::unit(b, 1)) == 0.0);
  const BasisPtr other = build_basis(BasisKind::DirichletSine, 16);
  CHECK_THROWS_AS((void)inner(CoeffVector::unit(b, 0), CoeffVector::unit(other, 0)), ShapeError);

  for (BasisKind kind : {BasisKind::DirichletSine, BasisKind::FourierTorus}) {
    const BasisPtr bb = build_basis(kind, 31);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const CoeffVector f = random_bandlimited(bb, 31, seed);
      const CoeffVector g = random_bandlimited(bb, 31, seed + 100);
      const Eigen::VectorXd fv = synthesize_on_grid(f);
      const Eigen::VectorXd gv = synthesize_on_grid(g);
      CHECK(std::abs(inner(f, f) - grid_quadrature(fv.cwiseProduct(fv), *bb)) <= 1e-8 * inner(f, f));
      CHECK(std::abs(inner(f, g) - grid_quadrature(fv.cwiseProduct(gv), *bb)) <= 1e-8 * f.coeffs().norm() * g.coeffs().norm());
      CHECK(inner(f, g) == inner(g, f));
    }
  }
}

TEST_CASE("sobolev and dual norms") {
  const BasisPtr b = build_basis(BasisKind::DirichletSine, 16);
  const CoeffVector e1 = CoeffVector::unit(b, 0);
  CHECK(sobolev_norm(e1, 1.0) == doctest::Approx(3.29691).epsilon(1e-5));
  CHECK(sobolev_norm(e1, -1.0) == doctest::Approx(0.303314).epsilon(1e-5));
  CHECK(dual_norm(e1, 3.5) == doctest::Approx(std::pow(1.0 + pi * pi, -1.75)).epsilon(1e-12));
  CHECK(dual_norm(e1, 3.5) == doctest::Approx(0.01540).epsilon(1e-3));
  CHECK(dual_norm(CoeffVector::zeros(b), 2.0) == 0.0);
  CHECK_THROWS_AS((void)dual_norm(e1, -0.5), ConfigError);

  const CoeffVector f = random_bandlimited(b, 16, 3);
  CHECK(sobolev_norm(f, 0.0) == doctest::Approx(f.coeffs().norm()).epsilon(1e-15));
  const std::vector<double> ladder{-3.0, -1.5, -0.5, 0.0, 0.7, 2.0};
  for (std::size_t i = 1; i < ladder.size(); ++i) CHECK(sobolev_norm(f, ladder[i - 1]) <= sobolev_norm(f, ladder[i]));
  for (double beta : {0.0, 1.0, 3.5}) CHECK(dual_norm(f, beta) <= sobolev_norm(f, 0.0));
}

TEST_CASE("sobolev weights positive and monotone with the sign of s") {
  const BasisPtr b = build_basis(BasisKind::FourierTorus, 21);
  for (double s : {-2.0, 1.5}) {
    const Eigen::VectorXd w = sobolev_scale(*b, s).weights;
    CHECK(w.minCoeff() > 0.0);
    for (Eigen::Index j = 1; j < w.size(); ++j) {
      if (s > 0) CHECK(w[j] >= w[j - 1]);
      else CHECK(w[j] <= w[j - 1]);
    }
  }
}

TEST_CASE("bump cutoff values and smoothness") {
  const BumpCutoff z = make_bump({0.2, 0.8}, {0.3, 0.7});
  CHECK(z(0.5) == 1.0);
  CHECK(z(0.3) == 1.0);
  CHECK(z(0.7) == 1.0);
  CHECK(z(0.15) == 0.0);
  CHECK(z(0.85) == 0.0);
  constexpr int n = 10000;
  const double h = 1.0 / n;
  double max_slope = 0.0;
  double max_jump = 0.0;
  double prev_slope = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = i * h;
    const double v = z(x);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    const double slope = (z(x + h) - v) / h;
    max_slope = std::max(max_slope, std::abs(slope));
    if (i > 0) max_jump = std::max(max_jump, std::abs(slope - prev_slope));
    prev_slope = slope;
  }
  // Derivative bounded, and it changes by O(h) between neighbours (no kinks).
  CHECK(max_slope < 100.0);
  CHECK(max_jump < 0.5);
}

TEST_CASE("bump nesting violations") {
  CHECK_THROWS_AS((void)make_bump({0.0, 0.8}, {0.3, 0.7}), ConfigError);
  CHECK_THROWS_AS((void)make_bump({0.2, 0.8}, {0.1, 0.7}), ConfigError);
  CHECK_THROWS_AS((void)make_bump({0.2, 0.8}, {0.3, 0.8}), ConfigError);
  CHECK_THROWS_AS((void)make_bump({0.2, 1.0}, {0.3, 0.7}), ConfigError);
  CHECK_NOTHROW((void)make_bump({0.2, 0.8}, {0.5, 0.5}));
}

TEST_CASE("band-limit projection") {
  const BasisPtr b = build_basis(BasisKind::FourierTorus, 21);
  const CoeffVector low = random_bandlimited(b, 7, 4);  // |k| <= 3
  CHECK(bandlimit_approx(low, 5).coeffs() == low.coeffs());
  const CoeffVector f = sobolev_random_draw(b, 1.5, 9);
  const CoeffVector once = bandlimit_approx(f, 4);
  CHECK(bandlimit_approx(once, 4).coeffs() == once.coeffs());
  for (std::size_t m = 0; m < 21; ++m)
    if (std::abs(b->frequency(m)) > 4) CHECK(once[m] == 0.0);
  CHECK_THROWS_AS((void)bandlimit_approx(f, 22), ConfigError);
}

TEST_CASE("band-limit with cutoff multiplies on the grid") {
  const BasisPtr b = build_basis(BasisKind::DirichletSine, 64);
  const BumpCutoff z = make_bump({0.1, 0.9}, {0.2, 0.8});
  const CoeffVector f = random_bandlimited(b, 6, 5);
  const CoeffVector g = bandlimit_approx(f, 64, z);
  const std::vector<double> x{0.05, 0.5, 0.95};
  const std::vector<double> fv = synthesize(f, x);
  const std::vector<double> gv = synthesize(g, x);
  CHECK(gv[1] == doctest::Approx(fv[1]).epsilon(1e-2));
  CHECK(std::abs(gv[0]) < 0.05 * (std::abs(fv[0]) + 1.0));
}

TEST_CASE("band-limit bounds on random torus draws") {
  const BasisPtr b = build_basis(BasisKind::FourierTorus, 129);
  const double alpha = 1.5;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const CoeffVector f = sobolev_random_draw(b, alpha, seed);
    const double fa2 = std::pow(sobolev_norm(f, alpha), 2);
    CHECK(fa2 == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t N : {2u, 8u, 30u}) {
      const double n2 = 1.0 + double(N) * double(N);
      const CoeffVector fe = bandlimit_approx(f, N);
      const CoeffVector diff = fe - f;
      for (double t : {0.0, 1.0, 2.5}) CHECK(std::pow(sobolev_norm(fe, t), 2) <= std::pow(n2, std::max(0.0, t - alpha)) * fa2);
      for (double s : {-1.0, 0.0, 1.0}) CHECK(std::pow(sobolev_norm(diff, s), 2) <= std::pow(n2, s - alpha) * fa2);
      for (double s : {0.0, 2.0}) CHECK(std::pow(dual_norm(diff, s), 2) <= std::pow(n2, -s - alpha) * fa2);
    }
  }
}

TEST_CASE("random H^alpha draws are reproducible") {
  const BasisPtr b = build_basis(BasisKind::DirichletSine, 32);
  CHECK(sobolev_random_draw(b, 2.0, 4).coeffs() == sobolev_random_draw(b, 2.0, 4).coeffs());
  CHECK(sobolev_random_draw(b, 2.0, 4).coeffs() != sobolev_random_draw(b, 2.0, 5).coeffs());
}

}  // TEST_SUITE
