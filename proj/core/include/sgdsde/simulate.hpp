#pragma once

// Path simulation and Monte Carlo estimation: the discrete stochastic
// gradient iteration, Euler–Maruyama integration of the diffusion models,
// deterministic parallel ensemble averaging, and weak-error measurement
// between the discrete iteration and a diffusion at matched times.

#include <cstdint>
#include <functional>
#include <vector>

#include "sgdsde/problems.hpp"
#include "sgdsde/proxies.hpp"
#include "sgdsde/rng.hpp"
#include "sgdsde/types.hpp"

namespace sgdsde {

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;       // real parts when the model is complex
  std::vector<Vector> imag_states;  // empty for real-valued dynamics
  // First index whose state contains a non-finite entry, -1 if none.  From
  // that index on, states repeat the last finite value.
  long nonfinite_step = -1;
};

// x_{k+1} = x_k - eta (grad f(x_k) + xi_k), recorded at every step including
// the initial point (times are k * eta).
Trajectory run_sgd(const Objective& obj, const NoiseModel& noise, double eta,
                   const Vector& x0, int steps, CounterRng& rng);

// Euler–Maruyama integration with step dt = eta / substeps_per_eta, recorded
// at the stepsize grid t = 0, eta, 2 eta, ..., up to t_end.  Complex models
// evolve z += B z dt + D sqrt(dt) zeta with real standard-normal increments
// zeta, storing real and imaginary parts separately.
Trajectory euler_maruyama(const SdeModel& model, const Vector& x0,
                          double t_end, int substeps_per_eta, CounterRng& rng);

using TrajectoryRunner = std::function<Trajectory(CounterRng&)>;
using Functional = std::function<double(const Vector&)>;

struct EnsembleStats {
  int n_runs = 0;
  std::uint64_t master_seed = 0;
  std::vector<double> times;
  std::vector<Vector> mean;         // per recorded time
  std::vector<Vector> mean_stderr;  // per-coordinate standard errors
  std::vector<Matrix> cov;          // sample covariance (n - 1 denominator)
  // fn_mean[j][k]: ensemble mean of functional j at time index k; evaluated
  // on the real part of the state.
  std::vector<std::vector<double>> fn_mean;
  std::vector<std::vector<double>> fn_stderr;
  double max_abs_imag = 0.0;  // largest imaginary entry seen across the run
  long nonfinite_count = 0;   // trajectories that went non-finite
};

// Runs n_runs independent trajectories, trajectory i drawing from
// CounterRng(master_seed, stream_offset + i).  Results are bitwise identical
// for any n_threads (0 = hardware concurrency): accumulation happens in
// fixed-size chunks combined in index order.  All trajectories must share
// times; non-finite trajectories still contribute (their frozen values are
// data).
EnsembleStats mc_run(const TrajectoryRunner& runner, int n_runs,
                     std::uint64_t master_seed,
                     const std::vector<Functional>& functionals = {},
                     std::uint64_t stream_offset = 0, int n_threads = 0);

struct WeakErrorReport {
  std::vector<double> times;        // k * eta for k = 0..K
  std::vector<double> per_k_error;  // |E u(x_k) - E u(X(k eta))|
  std::vector<double> per_k_stderr;
  double max_error = 0.0;
  double stderr_at_max = 0.0;
  int argmax_k = 0;
};

// Advances a continuous path over one stepsize window from state y,
// consuming exactly substeps * dim standard normals from zetas (grouped by
// substep, coordinates ascending within each group).
using WindowStepper =
    std::function<Vector(const Vector& y, const double* zetas, int substeps)>;

// Weak error of a diffusion model against the discrete iteration through a
// test functional u, |E u(X_k) - E u(Y_{k eta})| at every shared grid time.
// Real-mode models use a coupled estimator: each run drives the chain and
// the continuous path from one stream, feeding the chain the normalized sum
// of the window's standard-normal draws (through the noise-covariance square
// root, sign-aligned with the Brownian push).  Both marginal laws are exact
// and the shared randomness cancels most sampling variance, so the reported
// stderr is that of the paired-difference mean.  Complex-mode models have no
// real-path coupling and fall back to independent ensembles on disjoint
// stream ranges (stderr combined in quadrature).
WeakErrorReport weak_error(const Objective& obj, const NoiseModel& noise,
                           const SdeModel& model, const Functional& u,
                           double eta, int K, int n_runs, std::uint64_t seed,
                           const Vector& x0, int substeps_per_eta,
                           int n_threads = 0);

// Coupled weak error against a caller-supplied continuous-path integrator.
WeakErrorReport weak_error(const Objective& obj, const NoiseModel& noise,
                           const WindowStepper& stepper, const Functional& u,
                           double eta, int K, int n_runs, std::uint64_t seed,
                           const Vector& x0, int substeps_per_eta,
                           int n_threads = 0);

enum class ProxyKind { sme1, sme2, hasme };

// Locally linearized exponential integrator for the drift-structured
// proxies: at each substep the hessian eigensystem is frozen at the current
// state and the exact Ornstein–Uhlenbeck law of the frozen model is advanced
// over dt.  Per eigenmode the decay rate is lambda * phi(eta lambda) with
// phi = 1 (first order), 1 + eta lambda / 2 (second order), or
// -log(1 - eta lambda) / (eta lambda) (hessian-aware, requiring
// eta lambda < 1), and the window covariance integral uses each model's
// stationary per-mode diffusion.  Exact in law on quadratics for any dt;
// on general objectives the bias comes only from hessian variation along
// the path, so very few substeps per window suffice.  One hessian
// eigendecomposition per substep.
WindowStepper make_ou_window_stepper(const Objective& obj, NoiseModelPtr noise,
                                     double eta, ProxyKind kind);

struct OrderFit {
  double slope = 0.0;      // fitted weak order
  double intercept = 0.0;  // log-log offset
};

// Least-squares line through (log eta, log error).  Throws
// InsufficientPoints for fewer than 3 points and BelowNoiseFloor when any
// error is non-positive or smaller than 3x its standard error (the slope
// would measure Monte Carlo noise, not bias).
OrderFit weak_order_fit(const std::vector<double>& etas,
                        const std::vector<double>& errors,
                        const std::vector<double>& stderrs);

}  // namespace sgdsde
