// Tests for path simulation and estimation: the discrete iteration,
// Euler-Maruyama integration, deterministic parallel ensembles, the coupled
// weak-error estimator (including its pathwise-coincidence oracle on a flat
// objective), the exponential window stepper against exact laws, and the
// order fit.

#include <doctest.h>

#include <cmath>
#include <vector>

#include "sgdsde/errors.hpp"
#include "sgdsde/linalg.hpp"
#include "sgdsde/problems.hpp"
#include "sgdsde/proxies.hpp"
#include "sgdsde/quadratic_analytics.hpp"
#include "sgdsde/rng.hpp"
#include "sgdsde/simulate.hpp"
#include "sgdsde/types.hpp"

namespace {

using namespace sgdsde;

// Pulls the affine map w = M y + c + sum_q g_q zeta_q out of a window
// stepper by probing basis inputs; valid on quadratics with constant noise,
// where the stepper is exactly affine.
struct AffineWindow {
  Matrix M;
  Vector c;
  Matrix G;  // dim x (substeps * dim), one column per consumed normal
};

AffineWindow extract_affine(const WindowStepper& stepper, int dim,
                            int substeps) {
  AffineWindow w;
  const std::vector<double> zeros(
      static_cast<std::size_t>(substeps) * dim, 0.0);
  w.c = stepper(Vector::Zero(dim), zeros.data(), substeps);
  w.M.resize(dim, dim);
  for (int i = 0; i < dim; ++i) {
    const Vector col =
        stepper(Vector::Unit(dim, i), zeros.data(), substeps) - w.c;
    w.M.col(i) = col;
  }
  w.G.resize(dim, substeps * dim);
  for (int q = 0; q < substeps * dim; ++q) {
    std::vector<double> probe = zeros;
    probe[static_cast<std::size_t>(q)] = 1.0;
    w.G.col(q) = stepper(Vector::Zero(dim), probe.data(), substeps) - w.c;
  }
  return w;
}

TEST_SUITE("simulate") {

TEST_CASE("noise-free iteration contracts geometrically") {
  const QuadraticObjective obj(Matrix::Constant(1, 1, 0.8));
  const NoiseModelPtr off = make_isotropic_noise(1, 0.0);
  const double eta = 0.5;
  CounterRng rng(1, 0);
  const Trajectory traj =
      run_sgd(obj, *off, eta, Vector::Constant(1, 1.0), 6, rng);
  REQUIRE(traj.states.size() == 7);
  REQUIRE(traj.times.size() == 7);
  CHECK(traj.nonfinite_step == -1);
  for (int k = 0; k <= 6; ++k) {
    CHECK(traj.times[static_cast<std::size_t>(k)] ==
          doctest::Approx(k * eta).epsilon(1e-15));
    CHECK(traj.states[static_cast<std::size_t>(k)](0) ==
          doctest::Approx(std::pow(0.6, k)).epsilon(1e-13));
  }
}

TEST_CASE("iteration ensemble reproduces the analytic law") {
  Matrix A(2, 2);
  A << 0.8, 0.1, 0.1, 0.3;
  const QuadraticObjective obj(A);
  Matrix Sigma(2, 2);
  Sigma << 1.0, 0.4, 0.4, 2.0;
  const NoiseModelPtr noise = make_constant_noise(Sigma);
  const double eta = 0.3;
  Vector x0(2);
  x0 << 1.0, -0.5;
  const int steps = 5;

  const EnsembleStats stats = mc_run(
      [&](CounterRng& rng) {
        return run_sgd(obj, *noise, eta, x0, steps, rng);
      },
      20000, 7);
  REQUIRE(static_cast<int>(stats.times.size()) == steps + 1);
  CHECK(stats.nonfinite_count == 0);

  for (int k = 0; k <= steps; ++k) {
    const GaussianLaw law = sgd_law(A, Sigma, eta, x0, k);
    for (int i = 0; i < 2; ++i) {
      const double gap = std::abs(stats.mean[static_cast<std::size_t>(k)](i) -
                                  law.mean(i));
      CHECK(gap <=
            5.0 * stats.mean_stderr[static_cast<std::size_t>(k)](i) + 1e-12);
    }
    CHECK(max_abs(Matrix(stats.cov[static_cast<std::size_t>(k)] - law.cov)) <
          0.05 * std::max(0.05, max_abs(law.cov)));
  }
}

TEST_CASE("ensembles are bitwise identical across thread counts") {
  Matrix A(2, 2);
  A << 0.8, 0.1, 0.1, 0.3;
  const QuadraticObjective obj(A);
  const NoiseModelPtr noise = make_isotropic_noise(2, 1.0);
  Vector x0(2);
  x0 << 1.0, -0.5;
  const std::vector<Functional> fns = {
      [&obj](const Vector& x) { return obj.value(x); }};
  auto runner = [&](CounterRng& rng) {
    return run_sgd(obj, *noise, 0.3, x0, 4, rng);
  };

  const EnsembleStats one = mc_run(runner, 500, 11, fns, 0, 1);
  for (int threads : {2, 4}) {
    const EnsembleStats multi = mc_run(runner, 500, 11, fns, 0, threads);
    REQUIRE(multi.times.size() == one.times.size());
    for (std::size_t k = 0; k < one.times.size(); ++k) {
      CHECK(max_abs(Vector(multi.mean[k] - one.mean[k])) == 0.0);
      CHECK(max_abs(Vector(multi.mean_stderr[k] - one.mean_stderr[k])) == 0.0);
      CHECK(max_abs(Matrix(multi.cov[k] - one.cov[k])) == 0.0);
      CHECK(multi.fn_mean[0][k] == one.fn_mean[0][k]);
      CHECK(multi.fn_stderr[0][k] == one.fn_stderr[0][k]);
    }
  }

  // A different stream offset is a different ensemble.
  const EnsembleStats shifted = mc_run(runner, 500, 11, fns, 1000, 1);
  CHECK(max_abs(Vector(shifted.mean.back() - one.mean.back())) > 0.0);
}

TEST_CASE("integration freezes exploded trajectories and counts them") {
  SdeModel model;
  model.name = "explosive";
  model.dim = 1;
  model.eta = 1.0;
  model.mode = SdeMode::real;
  model.drift = [](const Vector& x) { return Vector(1e8 * x); };
  model.diffusion_sq = [](const Vector&) {
    return Matrix::Identity(1, 1);
  };
  model.diffusion = [](const Vector&) { return Matrix::Identity(1, 1); };

  CounterRng rng(5, 0);
  const Trajectory traj =
      euler_maruyama(model, Vector::Constant(1, 1.0), 10.0, 10, rng);
  REQUIRE(traj.nonfinite_step >= 0);
  const std::size_t frozen = static_cast<std::size_t>(traj.nonfinite_step);
  REQUIRE(frozen >= 1);
  for (std::size_t k = frozen; k < traj.states.size(); ++k) {
    CHECK(traj.states[k](0) == traj.states[frozen - 1](0));
  }

  const EnsembleStats stats = mc_run(
      [&](CounterRng& r) {
        return euler_maruyama(model, Vector::Constant(1, 1.0), 10.0, 10, r);
      },
      50, 3);
  CHECK(stats.nonfinite_count == 50);
}

TEST_CASE("integration tracks a deterministic flow and a complex rotation") {
  // Noise-free linear decay: dx = -x dt.
  SdeModel decay;
  decay.dim = 1;
  decay.eta = 0.5;
  decay.mode = SdeMode::real;
  decay.drift = [](const Vector& x) { return Vector(-x); };
  decay.diffusion_sq = [](const Vector&) { return Matrix::Zero(1, 1); };
  decay.diffusion = [](const Vector&) { return Matrix::Zero(1, 1); };
  CounterRng rng(1, 0);
  const Trajectory traj =
      euler_maruyama(decay, Vector::Constant(1, 1.0), 1.0, 500, rng);
  REQUIRE(traj.times.size() == 3);  // t = 0, 0.5, 1.0
  CHECK(traj.states.back()(0) ==
        doctest::Approx(std::exp(-1.0)).epsilon(3e-3));
  CHECK(traj.imag_states.empty());

  // Noise-free rotation: dz = i z dt preserves |z|.
  SdeModel rot;
  rot.dim = 1;
  rot.eta = 0.5;
  rot.mode = SdeMode::complex_quadratic;
  rot.drift_matrix = ComplexMatrix::Constant(1, 1, Complex(0.0, 1.0));
  rot.diffusion_matrix = ComplexMatrix::Zero(1, 1);
  CounterRng rng2(1, 0);
  const Trajectory spun =
      euler_maruyama(rot, Vector::Constant(1, 1.0), 1.0, 2000, rng2);
  REQUIRE(!spun.imag_states.empty());
  const double re = spun.states.back()(0);
  const double im = spun.imag_states.back()(0);
  CHECK(std::sqrt(re * re + im * im) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(re == doctest::Approx(std::cos(1.0)).epsilon(1e-2));
  CHECK(im == doctest::Approx(std::sin(1.0)).epsilon(1e-2));
}

TEST_CASE("coupled estimator reports an exactly zero gap on a flat objective") {
  // With zero curvature the chain and the first-order diffusion are the same
  // Gaussian walk driven by the shared draws, so every per-time gap must
  // vanish to roundoff -- this pins the sign convention of the coupling.
  const QuadraticObjective flat(Matrix::Zero(2, 2));
  Matrix Sigma(2, 2);
  Sigma << 1.0, 0.4, 0.4, 2.0;
  const NoiseModelPtr noise = make_constant_noise(Sigma);
  const double eta = 0.4;
  Vector x0(2);
  x0 << 0.3, -0.2;
  const Functional u = [](const Vector& x) { return x(0) + 2.0 * x(1); };

  for (int substeps : {1, 3}) {
    const SdeModel model = build_sme1(flat, noise, eta);
    const WeakErrorReport rep =
        weak_error(flat, *noise, model, u, eta, 6, 50, 3, x0, substeps);
    REQUIRE(rep.per_k_error.size() == 7);
    CHECK(rep.per_k_error[0] == 0.0);
    CHECK(rep.max_error <= 1e-12);
  }
}

TEST_CASE("coupled estimator is thread-invariant and validates arguments") {
  Matrix A(2, 2);
  A << 0.8, 0.1, 0.1, 0.3;
  const QuadraticObjective obj(A);
  const NoiseModelPtr noise = make_isotropic_noise(2, 1.0);
  const double eta = 0.3;
  Vector x0(2);
  x0 << 1.0, -0.5;
  const Functional u = [&obj](const Vector& x) { return obj.value(x); };
  const SdeModel model = build_sme1(obj, noise, eta);

  const WeakErrorReport base =
      weak_error(obj, *noise, model, u, eta, 4, 300, 5, x0, 2, 1);
  for (int threads : {2, 4}) {
    const WeakErrorReport rep =
        weak_error(obj, *noise, model, u, eta, 4, 300, 5, x0, 2, threads);
    for (std::size_t k = 0; k < base.per_k_error.size(); ++k) {
      CHECK(rep.per_k_error[k] == base.per_k_error[k]);
      CHECK(rep.per_k_stderr[k] == base.per_k_stderr[k]);
    }
    CHECK(rep.max_error == base.max_error);
    CHECK(rep.argmax_k == base.argmax_k);
  }

  CHECK_THROWS_AS(weak_error(obj, *noise, model, u, eta, 0, 300, 5, x0, 2),
                  DomainError);
  CHECK_THROWS_AS(weak_error(obj, *noise, model, u, eta, 4, 0, 5, x0, 2),
                  DomainError);
  CHECK_THROWS_AS(weak_error(obj, *noise, model, u, eta, 4, 300, 5, x0, 0),
                  DomainError);
}

TEST_CASE("stepper overload reproduces the built-in integrator bitwise") {
  Matrix A(2, 2);
  A << 0.8, 0.1, 0.1, 0.3;
  const QuadraticObjective obj(A);
  const NoiseModelPtr noise = make_isotropic_noise(2, 1.0);
  const double eta = 0.3;
  Vector x0(2);
  x0 << 1.0, -0.5;
  const Functional u = [&obj](const Vector& x) { return obj.value(x); };
  const SdeModel model = build_sme1(obj, noise, eta);
  const int substeps = 3;

  // A hand-rolled window stepper performing the same Euler updates in the
  // same floating-point order as the model overload's internal one.
  const WindowStepper em = [&model, eta](const Vector& y, const double* zetas,
                                         int s) -> Vector {
    const int n = model.dim;
    const double dt = eta / s;
    const double sqrt_dt = std::sqrt(dt);
    Vector w = y;
    for (int q = 0; q < s; ++q) {
      const Eigen::Map<const Vector> zeta(
          zetas + static_cast<std::size_t>(q) * n, n);
      w += model.drift(w) * dt + model.diffusion(w) * (sqrt_dt * zeta);
    }
    return w;
  };

  const WeakErrorReport via_model =
      weak_error(obj, *noise, model, u, eta, 4, 200, 5, x0, substeps);
  const WeakErrorReport via_stepper =
      weak_error(obj, *noise, em, u, eta, 4, 200, 5, x0, substeps);
  for (std::size_t k = 0; k < via_model.per_k_error.size(); ++k) {
    CHECK(via_stepper.per_k_error[k] == via_model.per_k_error[k]);
    CHECK(via_stepper.per_k_stderr[k] == via_model.per_k_stderr[k]);
  }
}

TEST_CASE("exponential window stepper is exact in law on quadratics") {
  Matrix A(2, 2);
  A << 0.8, 0.1, 0.1, 0.3;
  const double eta = 0.5;
  const double sigma2 = 1.3;
  Vector x0(2);
  x0 << 1.0, -0.5;
  const QuadraticObjective obj(A);
  const NoiseModelPtr iso = make_isotropic_noise(2, sigma2);
  const Matrix Sigma_iso = sigma2 * Matrix::Identity(2, 2);
  const int K = 4;

  auto law_gap = [&](ProxyKind kind, const NoiseModelPtr& noise,
                     const Matrix& Sigma, int substeps) {
    const WindowStepper stepper =
        make_ou_window_stepper(obj, noise, eta, kind);
    const AffineWindow w = extract_affine(stepper, 2, substeps);
    Vector mean = x0;
    Matrix cov = Matrix::Zero(2, 2);
    double worst = 0.0;
    for (int k = 1; k <= K; ++k) {
      mean = w.M * mean + w.c;
      cov = w.M * cov * w.M.transpose() + w.G * w.G.transpose();
      GaussianLaw law;
      switch (kind) {
        case ProxyKind::sme1:
          law = sme1_law(A, sigma2, eta, x0, k * eta);
          break;
        case ProxyKind::sme2:
          law = sme2_law(A, sigma2, eta, x0, k * eta);
          break;
        case ProxyKind::hasme:
          law = hasme_law_quadratic(A, Sigma, eta, x0, k);
          break;
      }
      worst = std::max(worst, max_abs(Vector(mean - law.mean)));
      worst = std::max(worst, max_abs(Matrix(cov - law.cov)));
    }
    return worst;
  };

  for (int substeps : {1, 3}) {
    CHECK(law_gap(ProxyKind::sme1, iso, Sigma_iso, substeps) < 1e-12);
    CHECK(law_gap(ProxyKind::sme2, iso, Sigma_iso, substeps) < 1e-12);
    CHECK(law_gap(ProxyKind::hasme, iso, Sigma_iso, substeps) < 1e-12);
  }

  // Dense constant covariance exercises the non-diagonal window integral.
  Matrix Sigma(2, 2);
  Sigma << 1.0, 0.4, 0.4, 2.0;
  const NoiseModelPtr dense = make_constant_noise(Sigma);
  for (int substeps : {1, 3}) {
    CHECK(law_gap(ProxyKind::hasme, dense, Sigma, substeps) < 1e-12);
  }
}

TEST_CASE("one-substep matched window is the discrete update itself") {
  // The matching construction makes the exponential window with a single
  // substep coincide with x - eta grad f + eta sqrt(Sigma) zeta, even on a
  // varying-curvature objective.
  const BimodalPiecewise well;
  const double sigma2 = 0.7;
  const double eta = 0.5;
  const NoiseModelPtr noise = make_isotropic_noise(1, sigma2);
  const WindowStepper stepper =
      make_ou_window_stepper(well, noise, eta, ProxyKind::hasme);
  for (double y0 : {0.5, 2.0}) {
    Vector y(1);
    y << y0;
    const double zeta = 0.9;
    const Vector out = stepper(y, &zeta, 1);
    const double expected =
        y0 - eta * well.gradient(y)(0) + eta * std::sqrt(sigma2) * zeta;
    CHECK(out(0) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("window stepper constructor and evaluation validate inputs") {
  const QuadraticObjective obj(Matrix::Constant(1, 1, 3.0));
  const NoiseModelPtr noise = make_isotropic_noise(1, 1.0);
  CHECK_THROWS_AS(make_ou_window_stepper(obj, nullptr, 0.5, ProxyKind::sme1),
                  DomainError);
  CHECK_THROWS_AS(make_ou_window_stepper(obj, noise, 0.0, ProxyKind::sme1),
                  DomainError);

  // eta lambda = 1.5 > 1: the matched decay rate does not exist.
  const WindowStepper super =
      make_ou_window_stepper(obj, noise, 0.5, ProxyKind::hasme);
  const double zeta = 0.0;
  CHECK_THROWS_AS(super(Vector::Constant(1, 1.0), &zeta, 1), NotWellPosed);
}

TEST_CASE("complex-mode estimator is deterministic with a zero initial gap") {
  Matrix A = Matrix::Zero(2, 2);
  A(0, 0) = 1.0;
  A(1, 1) = -1.0;
  const QuadraticObjective obj(A);
  const NoiseModelPtr noise = make_isotropic_noise(2, 1.0);
  const double eta = 2.1;
  Vector x0(2);
  x0 << 1.0, 1.0;
  const Functional u = [](const Vector& x) { return x(1) * x(1); };
  const SdeModel model =
      build_hasme(obj, noise, eta, SdeMode::complex_quadratic);

  const WeakErrorReport a =
      weak_error(obj, *noise, model, u, eta, 3, 400, 9, x0, 50);
  const WeakErrorReport b =
      weak_error(obj, *noise, model, u, eta, 3, 400, 9, x0, 50);
  REQUIRE(a.per_k_error.size() == 4);
  CHECK(a.per_k_error[0] == 0.0);
  CHECK(a.per_k_stderr.back() > 0.0);
  for (std::size_t k = 0; k < a.per_k_error.size(); ++k) {
    CHECK(a.per_k_error[k] == b.per_k_error[k]);
    CHECK(a.per_k_stderr[k] == b.per_k_stderr[k]);
  }
}

TEST_CASE("order fit recovers a clean slope and rejects noise-floor data") {
  const std::vector<double> etas = {0.4, 0.2, 0.1, 0.05};
  std::vector<double> errors;
  std::vector<double> stderrs;
  for (double e : etas) {
    errors.push_back(0.7 * e * e);
    stderrs.push_back(0.7 * e * e / 100.0);
  }
  const OrderFit fit = weak_order_fit(etas, errors, stderrs);
  CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(fit.intercept == doctest::Approx(std::log(0.7)).epsilon(1e-8));

  CHECK_THROWS_AS(weak_order_fit({0.1, 0.05}, {1e-3, 1e-3}, {1e-5, 1e-5}),
                  InsufficientPoints);
  CHECK_THROWS_AS(
      weak_order_fit({0.4, 0.2, 0.1}, {1e-3, 1e-3, 1e-3}, {1.0, 1e-9, 1e-9}),
      BelowNoiseFloor);
  CHECK_THROWS_AS(
      weak_order_fit({0.4, 0.2, 0.1}, {1e-3, 0.0, 1e-3}, {1e-9, 1e-9, 1e-9}),
      BelowNoiseFloor);
}

}  // TEST_SUITE

}  // namespace
