#pragma once

// First-exit-time analysis for the diffusion models: a deterministic
// quadrature for the one-dimensional mean exit time from a symmetric
// interval, a Monte Carlo exit-time estimator for a ball in any dimension,
// and scaling probes that summarize how the exit time depends on the
// stepsize.

#include <cstdint>
#include <string>
#include <vector>

#include "sgdsde/proxies.hpp"
#include "sgdsde/types.hpp"

namespace sgdsde {

struct ExitTimeReport {
  double eta = 0.0;
  std::string method;          // "quadrature" or "mc"
  double E_tau = 0.0;          // mean exit time (may overflow to inf)
  double log_E_tau = 0.0;      // always finite for quadrature results
  double tol_or_stderr = 0.0;  // achieved relative tolerance, or MC stderr
  double half_width = 0.0;     // interval half-width / ball radius
  double censored_fraction = 0.0;  // MC paths still inside at the time cap
  bool biased_low = false;         // censoring above 1%: estimate is a floor
  bool two_sided_extension = false;  // drift/diffusion asymmetric in x
};

// Mean exit time from (-a, a) started at 0 for a one-dimensional model,
// by solving the boundary-value problem 0.5 D u'' + b u' = -1, u(+-a) = 0
// on a uniform grid (trapezoid quadrature, grid doubled until the relative
// change is below quad_tol).  Exponentials are max-shifted so only the
// final result can overflow.  Throws DegenerateDiffusion when the
// diffusion-squared is not strictly positive on the interval and
// NoConvergence if refinement stalls.
ExitTimeReport hitting_time_1d(const SdeModel& model, double a,
                               double quad_tol = 1e-6);

// Potential psi with psi' = -2 b / D accumulated by cumulative trapezoid
// along the (ascending) grid and shifted so the interpolated value at 0
// vanishes.  exp(-psi) is the unnormalized stationary density when one
// exists.
std::vector<double> psi_profile(const SdeModel& model,
                                const std::vector<double>& grid);

// Monte Carlo mean exit time from the ball |x| < radius, Euler-Maruyama
// steps of size dt, paths censored at t_cap (censored paths count at t_cap,
// so censoring above 1%% marks the estimate biased_low).  Non-finite states
// count as immediate exits.  Deterministic for any thread count.
ExitTimeReport exit_time_mc(const SdeModel& model, double radius,
                            const Vector& x0, double dt, int n_runs,
                            double t_cap, std::uint64_t seed,
                            int n_threads = 0);

enum class ProbeKind {
  min_exp,         // near a minimum: eta * log E[tau] should flatten
  max_log,         // near a maximum: E[tau] / log(1/eta) should flatten
  saddle_compare,  // two-dimensional saddle: exit vs. trapping by model
};

struct ProbeConfig {
  std::vector<double> etas;
  double lambda = 1.0;       // curvature magnitude for the 1-d probes
  double sigma2 = 1.0;       // isotropic gradient-noise variance
  double half_width = 0.5;   // exit interval half-width / ball radius
  double quad_tol = 1e-6;
  Matrix A;                  // saddle_compare: quadratic coefficient matrix
  Vector x0;                 // saddle_compare: start point
  int n_runs = 1000;         // saddle_compare Monte Carlo size
  double t_cap_factor = 1e6;  // time cap = t_cap_factor * eta
  int substeps = 20;          // Monte Carlo substeps per eta
  std::uint64_t seed = 0;
};

struct ProbeReport {
  ProbeKind kind = ProbeKind::min_exp;
  // One report per stepsize for the 1-d kinds; for saddle_compare, one per
  // model at the first stepsize (hessian-aware first, then the
  // second-order model).
  std::vector<ExitTimeReport> reports;
  // Scaling statistic per report: eta * log E[tau] (min_exp),
  // E[tau] / log(1/eta) (max_log), censored fraction (saddle_compare).
  std::vector<double> statistic;
  bool stable = false;  // kind-specific flatness / separation heuristic
  std::string detail;
};

// Runs the requested scaling probe on quadratic objectives with isotropic
// noise.  min_exp and max_log need at least 3 stepsizes
// (InsufficientPoints otherwise); saddle_compare needs one stepsize, a
// square A, and a start point of matching dimension.
ProbeReport scaling_probe(ProbeKind kind, const ProbeConfig& cfg);

}  // namespace sgdsde
