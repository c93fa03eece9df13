#include "sgdsde/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "sgdsde/errors.hpp"
#include "sgdsde/linalg.hpp"

namespace sgdsde {

namespace {

bool all_finite(const Vector& v) { return v.allFinite(); }

int resolve_threads(int n_threads) {
  if (n_threads > 0) {
    return n_threads;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

Trajectory run_sgd(const Objective& obj, const NoiseModel& noise, double eta,
                   const Vector& x0, int steps, CounterRng& rng) {
  if (eta <= 0.0) {
    throw DomainError("run_sgd: eta must be positive");
  }
  if (steps < 0) {
    throw DomainError("run_sgd: negative step count");
  }
  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  Vector x = x0;
  traj.times.push_back(0.0);
  traj.states.push_back(x);
  for (int k = 0; k < steps; ++k) {
    if (traj.nonfinite_step < 0) {
      const Vector g = obj.gradient(x);
      const Vector xi = noise.sample(x, rng);
      Vector next = x - eta * (g + xi);
      if (all_finite(next)) {
        x = next;
      } else {
        traj.nonfinite_step = k + 1;  // freeze at the last finite state
      }
    }
    traj.times.push_back((k + 1) * eta);
    traj.states.push_back(x);
  }
  return traj;
}

Trajectory euler_maruyama(const SdeModel& model, const Vector& x0,
                          double t_end, int substeps_per_eta,
                          CounterRng& rng) {
  if (substeps_per_eta < 1) {
    throw DomainError("euler_maruyama: substeps_per_eta must be >= 1");
  }
  if (t_end < 0.0) {
    throw DomainError("euler_maruyama: negative end time");
  }
  const double eta = model.eta;
  const double dt = eta / substeps_per_eta;
  const double sqrt_dt = std::sqrt(dt);
  const int K = static_cast<int>(std::floor(t_end / eta + 1e-9));
  const int n = model.dim;

  Trajectory traj;
  traj.times.reserve(K + 1);
  traj.states.reserve(K + 1);

  if (model.mode == SdeMode::real) {
    Vector x = x0;
    traj.times.push_back(0.0);
    traj.states.push_back(x);
    for (int k = 0; k < K; ++k) {
      if (traj.nonfinite_step < 0) {
        Vector y = x;
        for (int s = 0; s < substeps_per_eta; ++s) {
          const Vector b = model.drift(y);
          const Matrix D = model.diffusion(y);
          Vector zeta(n);
          for (int i = 0; i < n; ++i) {
            zeta(i) = rng.normal();
          }
          y += b * dt + D * (sqrt_dt * zeta);
        }
        if (all_finite(y)) {
          x = y;
        } else {
          traj.nonfinite_step = k + 1;
        }
      }
      traj.times.push_back((k + 1) * eta);
      traj.states.push_back(x);
    }
    return traj;
  }

  // Complex constant-coefficient dynamics dz = B z dt + D dW with real
  // Brownian increments.
  const ComplexMatrix& B = model.drift_matrix;
  const ComplexMatrix& D = model.diffusion_matrix;
  traj.imag_states.reserve(K + 1);
  ComplexVector z = x0.cast<Complex>();
  traj.times.push_back(0.0);
  traj.states.push_back(z.real());
  traj.imag_states.push_back(z.imag());
  for (int k = 0; k < K; ++k) {
    if (traj.nonfinite_step < 0) {
      ComplexVector w = z;
      for (int s = 0; s < substeps_per_eta; ++s) {
        Vector zeta(n);
        for (int i = 0; i < n; ++i) {
          zeta(i) = rng.normal();
        }
        w += B * w * dt + D * (sqrt_dt * zeta).cast<Complex>();
      }
      if (all_finite(w.real()) && all_finite(w.imag())) {
        z = w;
      } else {
        traj.nonfinite_step = k + 1;
      }
    }
    traj.times.push_back((k + 1) * eta);
    traj.states.push_back(z.real());
    traj.imag_states.push_back(z.imag());
  }
  return traj;
}

namespace {

constexpr int kChunkSize = 64;

// Partial sums over one contiguous chunk of trajectory indices.  Chunks are
// combined in index order after all workers finish, so the final sums do not
// depend on how chunks were distributed over threads.
struct ChunkAccum {
  std::vector<Vector> sum_x;
  std::vector<Matrix> sum_xxt;
  std::vector<std::vector<double>> fn_sum;    // [functional][time]
  std::vector<std::vector<double>> fn_sumsq;
  double max_abs_imag = 0.0;
  long nonfinite = 0;
  long count = 0;
  std::vector<double> times;
};

void accumulate(ChunkAccum& acc, const Trajectory& traj,
                const std::vector<Functional>& functionals) {
  const std::size_t T = traj.times.size();
  if (acc.count == 0) {
    acc.times = traj.times;
    const Eigen::Index d = traj.states.empty() ? 0 : traj.states[0].size();
    acc.sum_x.assign(T, Vector::Zero(d));
    acc.sum_xxt.assign(T, Matrix::Zero(d, d));
    acc.fn_sum.assign(functionals.size(), std::vector<double>(T, 0.0));
    acc.fn_sumsq.assign(functionals.size(), std::vector<double>(T, 0.0));
  } else if (T != acc.times.size()) {
    throw WrongShape("mc_run: trajectories disagree on the number of "
                     "recorded times");
  }
  for (std::size_t k = 0; k < T; ++k) {
    const Vector& x = traj.states[k];
    acc.sum_x[k] += x;
    acc.sum_xxt[k] += x * x.transpose();
    for (std::size_t j = 0; j < functionals.size(); ++j) {
      const double v = functionals[j](x);
      acc.fn_sum[j][k] += v;
      acc.fn_sumsq[j][k] += v * v;
    }
  }
  for (const Vector& im : traj.imag_states) {
    acc.max_abs_imag = std::max(acc.max_abs_imag, max_abs(im));
  }
  if (traj.nonfinite_step >= 0) {
    ++acc.nonfinite;
  }
  ++acc.count;
}

void merge(ChunkAccum& total, const ChunkAccum& part) {
  if (part.count == 0) {
    return;
  }
  if (total.count == 0) {
    total = part;
    return;
  }
  if (part.times.size() != total.times.size()) {
    throw WrongShape("mc_run: trajectories disagree on the number of "
                     "recorded times");
  }
  for (std::size_t k = 0; k < total.sum_x.size(); ++k) {
    total.sum_x[k] += part.sum_x[k];
    total.sum_xxt[k] += part.sum_xxt[k];
  }
  for (std::size_t j = 0; j < total.fn_sum.size(); ++j) {
    for (std::size_t k = 0; k < total.fn_sum[j].size(); ++k) {
      total.fn_sum[j][k] += part.fn_sum[j][k];
      total.fn_sumsq[j][k] += part.fn_sumsq[j][k];
    }
  }
  total.max_abs_imag = std::max(total.max_abs_imag, part.max_abs_imag);
  total.nonfinite += part.nonfinite;
  total.count += part.count;
}

}  // namespace

EnsembleStats mc_run(const TrajectoryRunner& runner, int n_runs,
                     std::uint64_t master_seed,
                     const std::vector<Functional>& functionals,
                     std::uint64_t stream_offset, int n_threads) {
  if (n_runs < 1) {
    throw DomainError("mc_run: n_runs must be >= 1");
  }
  const int threads = std::min(resolve_threads(n_threads),
                               (n_runs + kChunkSize - 1) / kChunkSize);
  const int n_chunks = (n_runs + kChunkSize - 1) / kChunkSize;
  std::vector<ChunkAccum> chunks(n_chunks);

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
          CounterRng rng(master_seed, stream_offset + static_cast<std::uint64_t>(i));
          const Trajectory traj = runner(rng);
          accumulate(chunks[c], traj, functionals);
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

  ChunkAccum total;
  for (const ChunkAccum& part : chunks) {
    merge(total, part);
  }

  EnsembleStats stats;
  stats.n_runs = n_runs;
  stats.master_seed = master_seed;
  stats.times = total.times;
  stats.max_abs_imag = total.max_abs_imag;
  stats.nonfinite_count = total.nonfinite;
  const double n = static_cast<double>(n_runs);
  const std::size_t T = total.times.size();
  stats.mean.resize(T);
  stats.mean_stderr.resize(T);
  stats.cov.resize(T);
  for (std::size_t k = 0; k < T; ++k) {
    stats.mean[k] = total.sum_x[k] / n;
    if (n_runs > 1) {
      Matrix c = (total.sum_xxt[k] -
                  n * stats.mean[k] * stats.mean[k].transpose()) /
                 (n - 1.0);
      stats.cov[k] = (c + c.transpose()) / 2.0;
      stats.mean_stderr[k] =
          (stats.cov[k].diagonal().cwiseMax(0.0) / n).cwiseSqrt();
    } else {
      const Eigen::Index d = stats.mean[k].size();
      stats.cov[k] = Matrix::Zero(d, d);
      stats.mean_stderr[k] = Vector::Zero(d);
    }
  }
  stats.fn_mean.assign(functionals.size(), std::vector<double>(T, 0.0));
  stats.fn_stderr.assign(functionals.size(), std::vector<double>(T, 0.0));
  for (std::size_t j = 0; j < functionals.size(); ++j) {
    for (std::size_t k = 0; k < T; ++k) {
      const double mean = total.fn_sum[j][k] / n;
      stats.fn_mean[j][k] = mean;
      if (n_runs > 1) {
        const double var =
            std::max(0.0, (total.fn_sumsq[j][k] - n * mean * mean) / (n - 1.0));
        stats.fn_stderr[j][k] = std::sqrt(var / n);
      }
    }
  }
  return stats;
}

namespace {

// Coupled (common-random-number) weak-error core: the discrete chain and the
// continuous path share one stream per run.  Each window draws the
// integrator's substep normals; their normalized sum z ~ N(0, I) becomes the
// chain's gradient noise through the covariance square root, sign-aligned
// with the Brownian push.  Both marginal laws are exact, so the mean of
// u(X_k) - u(Y_{k eta}) is the weak error, while the shared randomness
// cancels most of the sampling variance.
WeakErrorReport paired_weak_error(const Objective& obj, const NoiseModel& noise,
                                  const WindowStepper& stepper,
                                  const Functional& u, double eta, int K,
                                  int n_runs, std::uint64_t seed,
                                  const Vector& x0, int substeps_per_eta,
                                  int n_threads) {
  WeakErrorReport rep;
  rep.times.resize(K + 1);
  for (int k = 0; k <= K; ++k) {
    rep.times[k] = k * eta;
  }
  const std::size_t T = rep.times.size();
  rep.per_k_error.assign(T, 0.0);
  rep.per_k_stderr.assign(T, 0.0);

  Matrix const_sqrt;
  const bool constant_noise = noise.constant();
  if (constant_noise) {
    const_sqrt = psd_sqrt(noise.covariance(x0));
  }
  const int n = static_cast<int>(x0.size());
  const double inv_sqrt_sub =
      1.0 / std::sqrt(static_cast<double>(substeps_per_eta));

  const int n_chunks = (n_runs + kChunkSize - 1) / kChunkSize;
  struct PairChunk {
    std::vector<double> sum_d;
    std::vector<double> sumsq_d;
    long count = 0;
  };
  std::vector<PairChunk> chunks(n_chunks);
  std::atomic<int> next_chunk{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    std::vector<double> d(T);
    std::vector<double> zetas(
        static_cast<std::size_t>(substeps_per_eta) * n);
    for (;;) {
      const int c = next_chunk.fetch_add(1);
      if (c >= n_chunks) {
        return;
      }
      try {
        PairChunk& acc = chunks[c];
        acc.sum_d.assign(T, 0.0);
        acc.sumsq_d.assign(T, 0.0);
        const int lo = c * kChunkSize;
        const int hi = std::min(lo + kChunkSize, n_runs);
        for (int i = lo; i < hi; ++i) {
          CounterRng rng(seed, static_cast<std::uint64_t>(i));
          Vector x = x0;  // discrete chain
          Vector y = x0;  // continuous path, recorded at the eta grid
          bool x_frozen = false;
          bool y_frozen = false;
          d[0] = 0.0;
          Vector zsum(n);
          for (int k = 0; k < K; ++k) {
            zsum.setZero();
            for (int s = 0; s < substeps_per_eta; ++s) {
              for (int j = 0; j < n; ++j) {
                const double g = rng.normal();
                zetas[static_cast<std::size_t>(s) * n + j] = g;
                zsum(j) += g;
              }
            }
            if (!y_frozen) {
              const Vector w = stepper(y, zetas.data(), substeps_per_eta);
              if (w.allFinite()) {
                y = w;
              } else {
                y_frozen = true;
              }
            }
            if (!x_frozen) {
              const Vector z = inv_sqrt_sub * zsum;
              const Vector push =
                  constant_noise ? Vector(const_sqrt * z)
                                 : Vector(psd_sqrt(noise.covariance(x)) * z);
              Vector next = x - eta * obj.gradient(x) + eta * push;
              if (next.allFinite()) {
                x = next;
              } else {
                x_frozen = true;
              }
            }
            d[k + 1] = u(x) - u(y);
          }
          for (std::size_t k = 0; k < T; ++k) {
            acc.sum_d[k] += d[k];
            acc.sumsq_d[k] += d[k] * d[k];
          }
          ++acc.count;
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

  const int threads = std::min(resolve_threads(n_threads), n_chunks);
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

  std::vector<double> sum_d(T, 0.0);
  std::vector<double> sumsq_d(T, 0.0);
  for (const PairChunk& part : chunks) {
    for (std::size_t k = 0; k < T; ++k) {
      sum_d[k] += part.sum_d[k];
      sumsq_d[k] += part.sumsq_d[k];
    }
  }
  const double nr = static_cast<double>(n_runs);
  rep.max_error = -1.0;
  for (std::size_t k = 0; k < T; ++k) {
    const double mean = sum_d[k] / nr;
    rep.per_k_error[k] = std::abs(mean);
    if (n_runs > 1) {
      const double var =
          std::max(0.0, (sumsq_d[k] - nr * mean * mean) / (nr - 1.0));
      rep.per_k_stderr[k] = std::sqrt(var / nr);
    }
    if (rep.per_k_error[k] > rep.max_error) {
      rep.max_error = rep.per_k_error[k];
      rep.stderr_at_max = rep.per_k_stderr[k];
      rep.argmax_k = static_cast<int>(k);
    }
  }
  return rep;
}

void check_weak_error_args(int K, int n_runs, int substeps_per_eta) {
  if (K < 1) {
    throw DomainError("weak_error: K must be >= 1");
  }
  if (n_runs < 1) {
    throw DomainError("weak_error: n_runs must be >= 1");
  }
  if (substeps_per_eta < 1) {
    throw DomainError("weak_error: substeps_per_eta must be >= 1");
  }
}

}  // namespace

WeakErrorReport weak_error(const Objective& obj, const NoiseModel& noise,
                           const SdeModel& model, const Functional& u,
                           double eta, int K, int n_runs, std::uint64_t seed,
                           const Vector& x0, int substeps_per_eta,
                           int n_threads) {
  check_weak_error_args(K, n_runs, substeps_per_eta);

  if (model.mode == SdeMode::real) {
    const WindowStepper em_window = [&model, eta](const Vector& y,
                                                  const double* zetas,
                                                  int substeps) -> Vector {
      const int n = model.dim;
      const double dt = eta / substeps;
      const double sqrt_dt = std::sqrt(dt);
      Vector w = y;
      for (int s = 0; s < substeps; ++s) {
        const Eigen::Map<const Vector> zeta(zetas + static_cast<std::size_t>(s) * n, n);
        w += model.drift(w) * dt + model.diffusion(w) * (sqrt_dt * zeta);
      }
      return w;
    };
    return paired_weak_error(obj, noise, em_window, u, eta, K, n_runs, seed,
                             x0, substeps_per_eta, n_threads);
  }

  // Complex-mode dynamics evolve an imaginary component the chain does not
  // have, so no pathwise coupling is available; compare independent
  // ensembles on disjoint stream ranges instead.
  WeakErrorReport rep;
  rep.times.resize(K + 1);
  for (int k = 0; k <= K; ++k) {
    rep.times[k] = k * eta;
  }
  const std::size_t T = rep.times.size();
  rep.per_k_error.assign(T, 0.0);
  rep.per_k_stderr.assign(T, 0.0);

  const std::vector<Functional> fns{u};
  const EnsembleStats discrete = mc_run(
      [&](CounterRng& rng) { return run_sgd(obj, noise, eta, x0, K, rng); },
      n_runs, seed, fns, /*stream_offset=*/0, n_threads);
  const std::uint64_t kSdeStreamOffset = std::uint64_t{1} << 40;
  const EnsembleStats continuous = mc_run(
      [&](CounterRng& rng) {
        return euler_maruyama(model, x0, K * eta, substeps_per_eta, rng);
      },
      n_runs, seed, fns, kSdeStreamOffset, n_threads);

  if (discrete.times.size() != continuous.times.size()) {
    throw WrongShape("weak_error: ensembles disagree on recorded times");
  }
  rep.max_error = -1.0;
  for (std::size_t k = 0; k < T; ++k) {
    rep.per_k_error[k] =
        std::abs(discrete.fn_mean[0][k] - continuous.fn_mean[0][k]);
    rep.per_k_stderr[k] =
        std::hypot(discrete.fn_stderr[0][k], continuous.fn_stderr[0][k]);
    if (rep.per_k_error[k] > rep.max_error) {
      rep.max_error = rep.per_k_error[k];
      rep.stderr_at_max = rep.per_k_stderr[k];
      rep.argmax_k = static_cast<int>(k);
    }
  }
  return rep;
}

WeakErrorReport weak_error(const Objective& obj, const NoiseModel& noise,
                           const WindowStepper& stepper, const Functional& u,
                           double eta, int K, int n_runs, std::uint64_t seed,
                           const Vector& x0, int substeps_per_eta,
                           int n_threads) {
  check_weak_error_args(K, n_runs, substeps_per_eta);
  return paired_weak_error(obj, noise, stepper, u, eta, K, n_runs, seed, x0,
                           substeps_per_eta, n_threads);
}

namespace {

// (1 - exp(-w)) / w, continuous through w = 0.
double window_decay(double w) {
  if (std::abs(w) < 1e-8) {
    return 1.0 - 0.5 * w;
  }
  return -std::expm1(-w) / w;
}

// -log(1 - z) / z, the hessian-aware per-mode drift multiplier; series near
// zero, singular at z = 1, undefined beyond.
double phi_hessian_aware(double z) {
  if (z == 1.0) {
    throw SingularStepsize(
        "ou stepper: eta * lambda = 1 makes the matched drift singular");
  }
  if (z > 1.0) {
    throw NotWellPosed(
        "ou stepper: eta * lambda > 1; the hessian-aware drift is complex");
  }
  if (std::abs(z) < 1e-4) {
    return 1.0 + z * (1.0 / 2 + z * (1.0 / 3 + z * (1.0 / 4 + z / 5)));
  }
  return -std::log1p(-z) / z;
}

}  // namespace

WindowStepper make_ou_window_stepper(const Objective& obj, NoiseModelPtr noise,
                                     double eta, ProxyKind kind) {
  if (!noise) {
    throw DomainError("make_ou_window_stepper: null noise model");
  }
  if (eta <= 0.0) {
    throw DomainError("make_ou_window_stepper: eta must be positive");
  }
  Matrix const_sigma;
  bool isotropic = false;
  if (noise->constant()) {
    const_sigma = noise->covariance(Vector::Zero(noise->dim()));
    isotropic =
        max_abs(Matrix(const_sigma -
                       const_sigma(0, 0) *
                           Matrix::Identity(const_sigma.rows(),
                                            const_sigma.cols()))) == 0.0;
  }
  const bool constant_noise = noise->constant();

  return [&obj, noise, eta, kind, constant_noise, isotropic, const_sigma](
             const Vector& y, const double* zetas, int substeps) -> Vector {
    const int n = static_cast<int>(y.size());
    const double dt = eta / substeps;
    Vector x = y;
    Vector rate(n), phi(n), mean_c(n);
    Matrix Q(n, n);
    for (int s = 0; s < substeps; ++s) {
      const EigenDecomposition d = eig_sym(obj.hessian(x));
      const Vector gbar = d.U.transpose() * obj.gradient(x);
      // Noise covariance in the frozen eigenbasis.
      Matrix sig_t;
      if (isotropic) {
        sig_t = const_sigma;
      } else if (constant_noise) {
        sig_t = d.U.transpose() * const_sigma * d.U;
      } else {
        sig_t = d.U.transpose() * noise->covariance(x) * d.U;
      }
      for (int i = 0; i < n; ++i) {
        const double z = eta * d.lambda(i);
        switch (kind) {
          case ProxyKind::sme1:
            phi(i) = 1.0;
            break;
          case ProxyKind::sme2:
            phi(i) = 1.0 + 0.5 * z;
            break;
          case ProxyKind::hasme:
            phi(i) = phi_hessian_aware(z);
            break;
        }
        rate(i) = d.lambda(i) * phi(i);
        mean_c(i) = -gbar(i) * phi(i) * dt * window_decay(rate(i) * dt);
      }
      const Eigen::Map<const Vector> zeta(
          zetas + static_cast<std::size_t>(s) * n, n);
      // Window covariance: Q_ij = S_ij * dt * decay((r_i + r_j) dt) with S
      // the model's diffusion-squared in the eigenbasis.  Any factor G with
      // G G^T = U Q U^T drives the same law; the symmetric principal root is
      // the one that tends to eta * sqrt(Sigma) as eta lambda -> 0, which
      // keeps the push aligned with the discrete chain's noise under the
      // common-random-number coupling.
      if (isotropic) {
        // Sigma commutes with everything, so Q is diagonal and the root is
        // U diag(sqrt(q)) U^T; apply it as two small matrix-vector products.
        Vector root(n);
        for (int i = 0; i < n; ++i) {
          double S = eta * sig_t(i, i);
          if (kind == ProxyKind::hasme) {
            const double z = eta * d.lambda(i);
            S *= diffusion_kernel(z, z);
          }
          root(i) = std::sqrt(
              std::max(0.0, S * dt * window_decay(2.0 * rate(i) * dt)));
        }
        const Vector zt = d.U.transpose() * zeta;
        x += d.U * Vector(mean_c + root.cwiseProduct(zt));
      } else {
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j <= i; ++j) {
            double S = eta * sig_t(i, j);
            if (kind == ProxyKind::hasme) {
              S *= diffusion_kernel(eta * d.lambda(i), eta * d.lambda(j));
            }
            const double q = S * dt * window_decay((rate(i) + rate(j)) * dt);
            Q(i, j) = q;
            Q(j, i) = q;
          }
        }
        const Matrix G = psd_sqrt(Matrix(d.U * Q * d.U.transpose()));
        x += d.U * mean_c + G * zeta;
      }
    }
    return x;
  };
}

OrderFit weak_order_fit(const std::vector<double>& etas,
                        const std::vector<double>& errors,
                        const std::vector<double>& stderrs) {
  if (etas.size() != errors.size() || etas.size() != stderrs.size()) {
    throw WrongShape("weak_order_fit: input lengths differ");
  }
  if (etas.size() < 3) {
    throw InsufficientPoints(
        "weak_order_fit: need at least 3 stepsizes for a slope");
  }
  for (std::size_t i = 0; i < etas.size(); ++i) {
    if (!(etas[i] > 0.0)) {
      throw DomainError("weak_order_fit: stepsizes must be positive");
    }
    if (!(errors[i] > 0.0) || errors[i] < 3.0 * stderrs[i]) {
      std::ostringstream msg;
      msg << "weak_order_fit: error " << errors[i] << " at eta " << etas[i]
          << " is within 3x its standard error " << stderrs[i]
          << "; the slope would measure sampling noise";
      throw BelowNoiseFloor(msg.str());
    }
  }
  const std::size_t m = etas.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double x = std::log(etas[i]);
    const double y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(m);
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) {
    throw DomainError("weak_order_fit: stepsizes are all equal");
  }
  OrderFit fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

}  // namespace sgdsde
