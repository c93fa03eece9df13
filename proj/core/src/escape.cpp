#include "sgdsde/escape.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "sgdsde/errors.hpp"
#include "sgdsde/problems.hpp"

namespace sgdsde {

namespace {

void require_real_1d(const SdeModel& model, const char* who) {
  if (model.mode != SdeMode::real) {
    throw DomainError(std::string(who) + ": requires a real-valued model");
  }
  if (model.dim != 1) {
    throw WrongShape(std::string(who) + ": requires a one-dimensional model");
  }
}

struct Fields1d {
  std::vector<double> b;
  std::vector<double> dsq;
};

Fields1d evaluate_fields(const SdeModel& model, const std::vector<double>& xs,
                         const char* who) {
  Fields1d f;
  f.b.resize(xs.size());
  f.dsq.resize(xs.size());
  Vector x(1);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    x(0) = xs[i];
    f.b[i] = model.drift(x)(0);
    f.dsq[i] = model.diffusion_sq(x)(0, 0);
    if (!(f.dsq[i] > 0.0)) {
      std::ostringstream msg;
      msg << who << ": diffusion-squared " << f.dsq[i] << " at x = " << xs[i]
          << " is not strictly positive";
      throw DegenerateDiffusion(msg.str());
    }
  }
  return f;
}

struct QuadPass {
  double log_u0 = 0.0;
  bool symmetric = true;
};

// One quadrature pass on a uniform odd grid of size N over [-a, a]:
// with psi' = -2 b / D, G(x) = int_0^x 2 e^{-psi}/D, and
// C1 = int e^psi G / int e^psi (both over the full interval), the mean exit
// time from 0 is u(0) = int_0^a e^{psi} (G - C1).  All exponentials are
// shifted by the grid extrema of psi, so u(0) is assembled as
// exp(max psi - min psi) * (a sum of O(1) terms) and only the final value
// can overflow.
QuadPass quad_pass(const SdeModel& model, double a, int N) {
  const double h = 2.0 * a / (N - 1);
  const int c = (N - 1) / 2;  // center index, x = 0
  std::vector<double> xs(N);
  for (int i = 0; i < N; ++i) {
    xs[i] = -a + h * i;
  }
  xs[c] = 0.0;
  const Fields1d f = evaluate_fields(model, xs, "hitting_time_1d");

  // psi by cumulative trapezoid outward from the center.
  std::vector<double> p(N);
  for (int i = 0; i < N; ++i) {
    p[i] = -2.0 * f.b[i] / f.dsq[i];
  }
  std::vector<double> psi(N);
  psi[c] = 0.0;
  for (int i = c + 1; i < N; ++i) {
    psi[i] = psi[i - 1] + 0.5 * h * (p[i - 1] + p[i]);
  }
  for (int i = c - 1; i >= 0; --i) {
    psi[i] = psi[i + 1] - 0.5 * h * (p[i] + p[i + 1]);
  }

  const double s_hi = *std::max_element(psi.begin(), psi.end());
  const double s_lo = *std::min_element(psi.begin(), psi.end());
  std::vector<double> e_hi(N);  // exp(psi - max psi), in (0, 1]
  std::vector<double> e_lo(N);  // exp(min psi - psi), in (0, 1]
  for (int i = 0; i < N; ++i) {
    e_hi[i] = std::exp(psi[i] - s_hi);
    e_lo[i] = std::exp(s_lo - psi[i]);
  }

  // G up to the factor exp(-min psi), again outward from the center.
  std::vector<double> q(N);
  for (int i = 0; i < N; ++i) {
    q[i] = 2.0 * e_lo[i] / f.dsq[i];
  }
  std::vector<double> G(N);
  G[c] = 0.0;
  for (int i = c + 1; i < N; ++i) {
    G[i] = G[i - 1] + 0.5 * h * (q[i - 1] + q[i]);
  }
  for (int i = c - 1; i >= 0; --i) {
    G[i] = G[i + 1] - 0.5 * h * (q[i] + q[i + 1]);
  }

  // C1 (shifted): shared exp(psi) shift cancels in the ratio.
  double num = 0.0;
  double den = 0.0;
  for (int i = 0; i + 1 < N; ++i) {
    num += 0.5 * h * (e_hi[i] * G[i] + e_hi[i + 1] * G[i + 1]);
    den += 0.5 * h * (e_hi[i] + e_hi[i + 1]);
  }
  const double C1 = num / den;

  double integral = 0.0;
  for (int i = c; i + 1 < N; ++i) {
    integral += 0.5 * h *
                (e_hi[i] * (G[i] - C1) + e_hi[i + 1] * (G[i + 1] - C1));
  }
  if (!(integral > 0.0)) {
    std::ostringstream msg;
    msg << "hitting_time_1d: quadrature produced a non-positive exit time "
        << "(shifted integral " << integral << ")";
    throw NoConvergence(msg.str());
  }

  QuadPass pass;
  pass.log_u0 = (s_hi - s_lo) + std::log(integral);

  double dsq_scale = 0.0;
  double b_scale = 0.0;
  for (int i = 0; i < N; ++i) {
    dsq_scale = std::max(dsq_scale, std::abs(f.dsq[i]));
    b_scale = std::max(b_scale, std::abs(f.b[i]));
  }
  for (int i = 0; i < N; ++i) {
    const int j = N - 1 - i;
    if (std::abs(f.dsq[i] - f.dsq[j]) > 1e-8 * dsq_scale ||
        std::abs(f.b[i] + f.b[j]) > 1e-8 * b_scale) {
      pass.symmetric = false;
      break;
    }
  }
  return pass;
}

}  // namespace

ExitTimeReport hitting_time_1d(const SdeModel& model, double a,
                               double quad_tol) {
  require_real_1d(model, "hitting_time_1d");
  if (!(a > 0.0)) {
    throw DomainError("hitting_time_1d: half-width must be positive");
  }
  if (!(quad_tol > 0.0)) {
    throw DomainError("hitting_time_1d: tolerance must be positive");
  }

  const int kStartN = 4097;
  const int kMaxN = ((kStartN - 1) << 9) + 1;  // about 2 million points
  QuadPass prev = quad_pass(model, a, kStartN);
  QuadPass cur = prev;
  double rel_change = std::numeric_limits<double>::infinity();
  for (int N = 2 * (kStartN - 1) + 1; N <= kMaxN; N = 2 * (N - 1) + 1) {
    cur = quad_pass(model, a, N);
    rel_change = std::abs(std::expm1(prev.log_u0 - cur.log_u0));
    if (rel_change <= quad_tol) {
      break;
    }
    prev = cur;
  }
  if (rel_change > quad_tol) {
    std::ostringstream msg;
    msg << "hitting_time_1d: grid refinement stalled at relative change "
        << rel_change << " (tolerance " << quad_tol << ")";
    throw NoConvergence(msg.str());
  }

  ExitTimeReport rep;
  rep.eta = model.eta;
  rep.method = "quadrature";
  rep.log_E_tau = cur.log_u0;
  rep.E_tau = std::exp(cur.log_u0);
  rep.tol_or_stderr = rel_change;
  rep.half_width = a;
  rep.two_sided_extension = !cur.symmetric;
  return rep;
}

std::vector<double> psi_profile(const SdeModel& model,
                                const std::vector<double>& grid) {
  require_real_1d(model, "psi_profile");
  if (grid.size() < 2) {
    throw InsufficientPoints("psi_profile: need at least 2 grid points");
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) {
      throw DomainError("psi_profile: grid must be strictly increasing");
    }
  }
  const Fields1d f = evaluate_fields(model, grid, "psi_profile");
  std::vector<double> p(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    p[i] = -2.0 * f.b[i] / f.dsq[i];
  }
  std::vector<double> psi(grid.size());
  psi[0] = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    psi[i] = psi[i - 1] + 0.5 * (grid[i] - grid[i - 1]) * (p[i - 1] + p[i]);
  }
  // Shift so the value interpolated at x = 0 vanishes (fall back to the left
  // endpoint when 0 lies outside the grid).
  double shift = psi[0];
  if (grid.front() <= 0.0 && 0.0 <= grid.back()) {
    std::size_t j = 0;
    while (j + 2 < grid.size() && grid[j + 1] < 0.0) {
      ++j;
    }
    const double w = (0.0 - grid[j]) / (grid[j + 1] - grid[j]);
    shift = (1.0 - w) * psi[j] + w * psi[j + 1];
  }
  for (double& v : psi) {
    v -= shift;
  }
  return psi;
}

namespace {

struct ExitSample {
  double t = 0.0;
  bool censored = false;
};

ExitSample simulate_exit(const SdeModel& model, double radius,
                         const Vector& x0, double dt, long max_steps,
                         double t_cap, CounterRng& rng) {
  const double sqrt_dt = std::sqrt(dt);
  const int n = model.dim;
  Vector x = x0;
  for (long k = 0; k < max_steps; ++k) {
    if (x.norm() >= radius) {
      return {k * dt, false};
    }
    const Vector b = model.drift(x);
    const Matrix D = model.diffusion(x);
    Vector zeta(n);
    for (int i = 0; i < n; ++i) {
      zeta(i) = rng.normal();
    }
    x += b * dt + D * (sqrt_dt * zeta);
    if (!x.allFinite()) {
      return {(k + 1) * dt, false};  // a blow-up is an exit
    }
  }
  if (x.norm() >= radius) {
    return {max_steps * dt, false};
  }
  return {t_cap, true};
}

}  // namespace

ExitTimeReport exit_time_mc(const SdeModel& model, double radius,
                            const Vector& x0, double dt, int n_runs,
                            double t_cap, std::uint64_t seed, int n_threads) {
  if (model.mode != SdeMode::real) {
    throw DomainError("exit_time_mc: requires a real-valued model");
  }
  if (x0.size() != model.dim) {
    throw WrongShape("exit_time_mc: start point dimension mismatch");
  }
  if (!(radius > 0.0)) {
    throw DomainError("exit_time_mc: radius must be positive");
  }
  if (!(dt > 0.0) || !(t_cap >= dt)) {
    throw DomainError("exit_time_mc: need dt > 0 and t_cap >= dt");
  }
  if (n_runs < 1) {
    throw DomainError("exit_time_mc: n_runs must be >= 1");
  }
  const long max_steps = static_cast<long>(std::ceil(t_cap / dt - 1e-9));

  constexpr int kChunkSize = 64;
  const int n_chunks = (n_runs + kChunkSize - 1) / kChunkSize;
  struct Chunk {
    double sum = 0.0;
    double sumsq = 0.0;
    long censored = 0;
  };
  std::vector<Chunk> chunks(n_chunks);
  std::atomic<int> next_chunk{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    for (;;) {
      const int c = next_chunk.fetch_add(1);
      if (c >= n_chunks) {
        return;
      }
      try {
        const int lo = c * kChunkSize;
        const int hi = std::min(lo + kChunkSize, n_runs);
        for (int i = lo; i < hi; ++i) {
          CounterRng rng(seed, static_cast<std::uint64_t>(i));
          const ExitSample s =
              simulate_exit(model, radius, x0, dt, max_steps, t_cap, rng);
          chunks[c].sum += s.t;
          chunks[c].sumsq += s.t * s.t;
          if (s.censored) {
            ++chunks[c].censored;
          }
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) {
          first_error = std::current_exception();
        }
        return;
      }
    }
  };

  int threads = n_threads > 0 ? n_threads
                              : static_cast<int>(std::max(
                                    1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, n_chunks);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back(worker);
    }
    for (std::thread& t : pool) {
      t.join();
    }
  }
  if (first_error) {
    std::rethrow_exception(first_error);
  }

  double sum = 0.0;
  double sumsq = 0.0;
  long censored = 0;
  for (const Chunk& ch : chunks) {
    sum += ch.sum;
    sumsq += ch.sumsq;
    censored += ch.censored;
  }

  const double n = static_cast<double>(n_runs);
  ExitTimeReport rep;
  rep.eta = model.eta;
  rep.method = "mc";
  rep.E_tau = sum / n;
  rep.log_E_tau = std::log(rep.E_tau);
  if (n_runs > 1) {
    const double var =
        std::max(0.0, (sumsq - n * rep.E_tau * rep.E_tau) / (n - 1.0));
    rep.tol_or_stderr = std::sqrt(var / n);
  }
  rep.half_width = radius;
  rep.censored_fraction = static_cast<double>(censored) / n;
  rep.biased_low = rep.censored_fraction > 0.01;
  return rep;
}

ProbeReport scaling_probe(ProbeKind kind, const ProbeConfig& cfg) {
  ProbeReport rep;
  rep.kind = kind;

  if (kind == ProbeKind::saddle_compare) {
    if (cfg.etas.empty()) {
      throw InsufficientPoints("scaling_probe: saddle_compare needs a stepsize");
    }
    if (cfg.A.rows() == 0 || cfg.A.rows() != cfg.A.cols()) {
      throw WrongShape("scaling_probe: saddle_compare needs a square A");
    }
    if (cfg.x0.size() != cfg.A.rows()) {
      throw WrongShape("scaling_probe: start point does not match A");
    }
    const double eta = cfg.etas.front();
    const double dt = eta / cfg.substeps;
    const double t_cap = cfg.t_cap_factor * eta;
    const QuadraticObjective obj(cfg.A);
    const NoiseModelPtr noise =
        make_isotropic_noise(static_cast<int>(cfg.A.rows()), cfg.sigma2);
    const SdeModel ha = build_hasme(obj, noise, eta, SdeMode::real);
    const SdeModel sme2 = build_sme2(obj, noise, eta);
    rep.reports.push_back(exit_time_mc(ha, cfg.half_width, cfg.x0, dt,
                                       cfg.n_runs, t_cap, cfg.seed));
    rep.reports.push_back(exit_time_mc(sme2, cfg.half_width, cfg.x0, dt,
                                       cfg.n_runs, t_cap, cfg.seed));
    rep.statistic = {rep.reports[0].censored_fraction,
                     rep.reports[1].censored_fraction};
    rep.stable = rep.statistic[0] < 0.5 && rep.statistic[1] > 0.5;
    std::ostringstream detail;
    detail << "hessian-aware censored fraction " << rep.statistic[0]
           << ", second-order model censored fraction " << rep.statistic[1];
    rep.detail = detail.str();
    return rep;
  }

  if (cfg.etas.size() < 3) {
    throw InsufficientPoints(
        "scaling_probe: need at least 3 stepsizes to judge a scaling law");
  }
  const double curvature =
      kind == ProbeKind::min_exp ? cfg.lambda : -cfg.lambda;
  for (double eta : cfg.etas) {
    if (kind == ProbeKind::max_log && !(eta > 0.0 && eta < 1.0)) {
      throw DomainError(
          "scaling_probe: max_log statistic needs stepsizes in (0, 1)");
    }
    const QuadraticObjective obj(Matrix::Constant(1, 1, curvature));
    const NoiseModelPtr noise = make_isotropic_noise(1, cfg.sigma2);
    const SdeModel model = build_hasme(obj, noise, eta, SdeMode::real);
    rep.reports.push_back(hitting_time_1d(model, cfg.half_width, cfg.quad_tol));
    const ExitTimeReport& r = rep.reports.back();
    rep.statistic.push_back(kind == ProbeKind::min_exp
                                ? eta * r.log_E_tau
                                : r.E_tau / std::log(1.0 / eta));
  }

  std::ostringstream detail;
  if (kind == ProbeKind::min_exp) {
    const double last = rep.statistic[rep.statistic.size() - 1];
    const double prev = rep.statistic[rep.statistic.size() - 2];
    const double change = std::abs(last - prev) / std::abs(last);
    rep.stable = change <= 0.15;
    detail << "eta * log E[tau] settles at " << last
           << " (last-step relative change " << change << ")";
  } else {
    const double lo =
        *std::min_element(rep.statistic.begin(), rep.statistic.end());
    const double hi =
        *std::max_element(rep.statistic.begin(), rep.statistic.end());
    rep.stable = lo > 0.0 && hi <= 2.0 * lo;
    detail << "E[tau] / log(1/eta) spans [" << lo << ", " << hi << "]";
  }
  rep.detail = detail.str();
  return rep;
}

}  // namespace sgdsde
