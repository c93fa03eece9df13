// Microbenchmarks for the numerical hot paths: symmetric eigendecomposition,
// the Hessian-aware drift/diffusion field evaluation, coefficient-table
// construction, and Euler-Maruyama integration windows.

#include <benchmark/benchmark.h>

#include "sgdsde/coefficients.hpp"
#include "sgdsde/linalg.hpp"
#include "sgdsde/problems.hpp"
#include "sgdsde/proxies.hpp"
#include "sgdsde/rng.hpp"
#include "sgdsde/simulate.hpp"
#include "sgdsde/types.hpp"

namespace {

using namespace sgdsde;

Matrix bench_symmetric(int n, std::uint64_t seed) {
  CounterRng rng(seed, 0);
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      m(i, j) = rng.normal();
    }
  }
  return Matrix(0.5 * (m + m.transpose()));
}

void BM_EigSym(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Matrix A = bench_symmetric(n, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(eig_sym(A));
  }
}
BENCHMARK(BM_EigSym)->Arg(8)->Arg(64)->Arg(193);

void BM_HessianAwareFields(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Matrix A = bench_symmetric(n, 11);
  const double lmax = eig_sym(A).lambda.cwiseAbs().maxCoeff();
  const double eta = 0.5 / lmax;
  const QuadraticObjective obj(A);
  const NoiseModelPtr noise = make_isotropic_noise(n, 1.0);
  CounterRng rng(12, 0);
  Vector x(n);
  for (int i = 0; i < n; ++i) {
    x(i) = rng.normal();
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(hasme_drift(obj, x, eta));
    benchmark::DoNotOptimize(hasme_diffusion_sq(obj, *noise, x, eta));
  }
}
BENCHMARK(BM_HessianAwareFields)->Arg(4)->Arg(16)->Arg(64);

void BM_CoeffTable(benchmark::State& state) {
  const int order = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(a_coeff_table(order));
  }
}
BENCHMARK(BM_CoeffTable)->Arg(8)->Arg(20)->Arg(40);

void BM_EulerWindow(benchmark::State& state) {
  const int substeps = static_cast<int>(state.range(0));
  Matrix A(2, 2);
  A << 1.0, 0.2, 0.2, 0.5;
  const QuadraticObjective obj(A);
  const NoiseModelPtr noise = make_isotropic_noise(2, 1.0);
  const double eta = 0.5;
  const SdeModel model = build_sme1(obj, noise, eta);
  Vector x0(2);
  x0 << 1.0, -0.5;
  for (auto _ : state) {
    CounterRng rng(9, 0);
    benchmark::DoNotOptimize(euler_maruyama(model, x0, eta, substeps, rng));
  }
}
BENCHMARK(BM_EulerWindow)->Arg(20)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
