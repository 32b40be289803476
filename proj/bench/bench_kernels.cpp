// Serial reference kernels vs their OpenMP versions.

#include <benchmark/benchmark.h>

#include "bvm/forward.hpp"
#include "bvm/harness.hpp"
#include "bvm/prior.hpp"
#include "bvm/spectral.hpp"

namespace {

struct BvpFixture {
  bvm::BasisPtr basis = bvm::build_basis(bvm::BasisKind::DirichletSine, 256);
  bvm::GaussianPrior prior = bvm::matern_prior(basis, 1.0);
  bvm::ForwardOperator op = bvm::elliptic_operator(bvm::EllipticCoefficient::constant(1.0), basis).L_inv;
  bvm::CoeffVector truth = bvm::sobolev_random_draw(basis, 2.0, 1);
  bvm::TestFunctional tf = bvm::representer(op, bvm::bump_functional(basis, {0.1, 0.9}, {0.3, 0.7}, 1, 4));

  bvm::ReplicateConfig config(std::size_t n) const {
    bvm::ReplicateConfig rc;
    rc.epsilon = 1e-3;
    rc.n_replicates = n;
    rc.master_seed = 7;
    return rc;
  }
};

const BvpFixture& fixture() {
  static const BvpFixture f;
  return f;
}

void BM_ReplicatesSerial(benchmark::State& state) {
  const BvpFixture& f = fixture();
  const auto rc = f.config(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto r = bvm::serial::run_replicates(f.prior, f.op, f.truth, std::span(&f.tf, 1), rc);
    benchmark::DoNotOptimize(r.data());
  }
}

void BM_ReplicatesParallel(benchmark::State& state) {
  const BvpFixture& f = fixture();
  const auto rc = f.config(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto r = bvm::run_replicates(f.prior, f.op, f.truth, std::span(&f.tf, 1), rc, 0);
    benchmark::DoNotOptimize(r.data());
  }
}

void BM_SmallBallSerial(benchmark::State& state) {
  const BvpFixture& f = fixture();
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(bvm::serial::small_ball_hits(f.prior, -2.0, 0.1, n, 3));
}

void BM_SmallBallParallel(benchmark::State& state) {
  const BvpFixture& f = fixture();
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(bvm::small_ball_hits(f.prior, -2.0, 0.1, n, 3, 0));
}

}  // namespace

BENCHMARK(BM_ReplicatesSerial)->Arg(256)->Arg(2048)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReplicatesParallel)->Arg(256)->Arg(2048)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SmallBallSerial)->Arg(1 << 16)->Arg(1 << 18)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SmallBallParallel)->Arg(1 << 16)->Arg(1 << 18)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
