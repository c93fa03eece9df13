#include "sgdsde/proxies.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>
#include <utility>

#include "sgdsde/errors.hpp"
#include "sgdsde/linalg.hpp"
#include "sgdsde/quadratic_analytics.hpp"

namespace sgdsde {

namespace {

Matrix symmetrized(const Matrix& M) { return (M + M.transpose()) / 2.0; }

double spectral_max_abs(const Vector& lambda) {
  return lambda.size() == 0 ? 0.0 : lambda.cwiseAbs().maxCoeff();
}

// Real drift coefficient log(1-z)/z; caller guarantees z < 1.
double drift_coeff_real(double z) {
  if (std::abs(z) < 1e-4) {
    // log(1-z)/z = -(1 + z/2 + z^2/3 + z^3/4 + z^4/5) + O(z^5)
    return -(1.0 + z * (0.5 + z * (1.0 / 3.0 + z * (0.25 + z * 0.2))));
  }
  return std::log1p(-z) / z;
}

Matrix diffusion_sq_with(const EigenDecomposition& d, const Matrix& Sigma,
                         double eta);

}  // namespace

Complex sgd_matching_drift_coeff(double z) {
  if (z == 1.0) {
    throw SingularStepsize("drift coefficient undefined at eta * lambda == 1");
  }
  if (z < 1.0) {
    return Complex(drift_coeff_real(z), 0.0);
  }
  // Supercritical: 1 - z < 0, principal branch log(z-1) + i pi.
  return Complex(std::log(z - 1.0), 3.14159265358979323846) / z;
}

double diffusion_kernel(double x, double y) {
  const double d = x * y - x - y;  // (1-x)(1-y) = 1 + d
  if (std::abs(d) < 1e-6) {
    // log1p(d)/d = sum_k (-d)^k/(k+1), truncated at order 12.
    double series = 0.0;
    double dk = 1.0;
    for (int k = 0; k <= 12; ++k) {
      series += dk / static_cast<double>(k + 1);
      dk *= -d;
    }
    return series;
  }
  if (1.0 + d == 0.0) {
    throw SingularStepsize("diffusion kernel undefined at eta * lambda == 1");
  }
  if (1.0 + d < 0.0) {
    std::ostringstream msg;
    msg << "diffusion kernel is complex at (x,y) = (" << x << "," << y
        << "): one mode is subcritical and one supercritical";
    throw NotWellPosed(msg.str());
  }
  return std::log1p(d) / d;
}

ComplexVector hasme_drift(const Objective& obj, const Vector& x, double eta) {
  const EigenDecomposition d = eig_sym(obj.hessian(x));
  const Eigen::Index n = d.lambda.size();
  ComplexVector coeffs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    coeffs(i) = sgd_matching_drift_coeff(eta * d.lambda(i));
  }
  const ComplexVector g_modes =
      d.U.transpose().cast<Complex>() * obj.gradient(x).cast<Complex>();
  ComplexVector out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i) = coeffs(i) * g_modes(i);
  }
  return d.U.cast<Complex>() * out;
}

Matrix hasme_diffusion_sq(const Objective& obj, const NoiseModel& noise,
                          const Vector& x, double eta) {
  return diffusion_sq_with(eig_sym(obj.hessian(x)), noise.covariance(x), eta);
}

ExistenceReport hasme_existence_check(const Objective& obj,
                                      const NoiseModel& noise, const Vector& x,
                                      double eta) {
  ExistenceReport rep;
  const Matrix H = obj.hessian(x);
  const Matrix Sigma = noise.covariance(x);

  const double scale = max_abs(H) * max_abs(Sigma);
  rep.commutator_residual = max_abs(Matrix(H * Sigma - Sigma * H));
  rep.commuting = rep.commutator_residual <= 1e-8 * scale + 1e-300;

  try {
    const Matrix dsq = hasme_diffusion_sq(obj, noise, x, eta);
    const EigenDecomposition ed = eig_sym(dsq);
    rep.min_eig = ed.lambda.minCoeff();
    rep.psd = rep.min_eig >= -1e-10;
  } catch (const Error&) {
    // Kernel turned complex or singular: certainly not a real PSD field.
    rep.min_eig = std::numeric_limits<double>::quiet_NaN();
    rep.psd = false;
  }

  const EigenDecomposition hd = eig_sym(H);
  const double hnorm = spectral_max_abs(hd.lambda);
  const EigenDecomposition sd = eig_sym(Sigma);
  const double smin = sd.lambda.minCoeff();
  const double smax = sd.lambda.maxCoeff();
  const double dimension = static_cast<double>(x.size());
  double ratio = 0.0;
  if (smax > 0.0) {
    ratio = smin / (std::sqrt(dimension) * smax);
  }
  ratio = std::min(std::max(ratio, 0.0), 1.0);
  const double term1 = 1.0 - std::sqrt(1.0 - ratio);
  const double term2 = 1.0 - std::sqrt(2.0) / 2.0;
  rep.eta_threshold = hnorm > 0.0
                          ? std::min(term1, term2) / hnorm
                          : std::numeric_limits<double>::infinity();
  return rep;
}

Matrix commuting_diffusion(const Vector& lambda, const Vector& sigma2_diag,
                           double eta) {
  if (lambda.size() != sigma2_diag.size()) {
    throw WrongShape("commuting_diffusion: eigenvalue and variance counts differ");
  }
  const Eigen::Index n = lambda.size();
  Matrix D = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (sigma2_diag(i) < 0.0) {
      throw NotPSD("commuting_diffusion: negative modal variance");
    }
    // Per-mode diffusion-squared sigma2 * log((1-z)^2) / (eta lambda^2
    // - 2 lambda) = sigma2 * eta * a(z,z) with z = eta lambda; nonnegative
    // for every z != 1.
    const double z = eta * lambda(i);
    const double dsq = sigma2_diag(i) * eta * diffusion_kernel(z, z);
    if (dsq < 0.0) {
      std::ostringstream msg;
      msg << "commuting_diffusion: negative radicand " << dsq << " at mode "
          << i;
      throw NotPSD(msg.str());
    }
    D(i, i) = std::sqrt(dsq);
  }
  return D;
}

// --- model builders -----------------------------------------------------------

SdeModel build_sme1(const Objective& obj, NoiseModelPtr noise, double eta) {
  if (eta <= 0.0) {
    throw DomainError("build_sme1: eta must be positive");
  }
  SdeModel m;
  m.name = "sme1";
  m.dim = obj.dim();
  m.eta = eta;
  m.mode = SdeMode::real;
  const Objective* o = &obj;
  m.drift = [o](const Vector& x) { return Vector(-o->gradient(x)); };
  if (noise->constant()) {
    const Matrix dsq = eta * noise->covariance(Vector::Zero(obj.dim()));
    const Matrix droot = psd_sqrt(dsq);
    m.diffusion_sq = [dsq](const Vector&) { return dsq; };
    m.diffusion = [droot](const Vector&) { return droot; };
  } else {
    m.diffusion_sq = [noise, eta](const Vector& x) {
      return Matrix(eta * noise->covariance(x));
    };
    m.diffusion = [noise, eta](const Vector& x) {
      return psd_sqrt(Matrix(eta * noise->covariance(x)));
    };
  }
  return m;
}

SdeModel build_sme2(const Objective& obj, NoiseModelPtr noise, double eta) {
  SdeModel m = build_sme1(obj, std::move(noise), eta);
  m.name = "sme2";
  const Objective* o = &obj;
  m.drift = [o, eta](const Vector& x) {
    const Vector g = o->gradient(x);
    return Vector(-g - 0.5 * eta * o->hessian_vec(x, g));
  };
  return m;
}

namespace {

// Single-slot memo for the Hessian eigendecomposition at the last evaluated
// point.  The integrator asks for drift and diffusion at the same state, so
// this halves the number of Hessian factorizations; on objectives with
// finite-difference Hessians that is the dominant cost.  Thread-safe; a miss
// under contention just recomputes, which cannot change any value.
struct DecompCache {
  std::mutex mu;
  bool valid = false;
  Vector x;
  EigenDecomposition d;
};

EigenDecomposition cached_decomp(DecompCache& cache, const Objective& obj,
                                 const Vector& x) {
  {
    std::lock_guard<std::mutex> lock(cache.mu);
    if (cache.valid && cache.x.size() == x.size() &&
        (cache.x.array() == x.array()).all()) {
      return cache.d;
    }
  }
  EigenDecomposition d = eig_sym(obj.hessian(x));
  {
    std::lock_guard<std::mutex> lock(cache.mu);
    cache.valid = true;
    cache.x = x;
    cache.d = d;
  }
  return d;
}

void require_subcritical(const Objective& obj, const EigenDecomposition& d,
                         double eta, const char* who) {
  if (!obj.constant_hessian() && eta * spectral_max_abs(d.lambda) >= 1.0) {
    std::ostringstream msg;
    msg << who << ": eta * ||hessian|| >= 1 at an evaluated point of a "
        << "non-quadratic objective";
    throw NotWellPosed(msg.str());
  }
}

// Shared by spf and hasme: per-point real drift through the matching
// coefficient; enforces the non-quadratic stepsize restriction.
Vector matching_drift_real_with(const Objective& obj,
                                const EigenDecomposition& d, const Vector& x,
                                double eta, const char* who) {
  require_subcritical(obj, d, eta, who);
  const Eigen::Index n = d.lambda.size();
  Vector coeffs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Complex c = sgd_matching_drift_coeff(eta * d.lambda(i));
    if (c.imag() != 0.0) {
      std::ostringstream msg;
      msg << who << ": eta * lambda = " << eta * d.lambda(i)
          << " > 1 makes the drift complex; use the complex mode";
      throw NotWellPosed(msg.str());
    }
    coeffs(i) = c.real();
  }
  const Vector g_modes = d.U.transpose() * obj.gradient(x);
  return d.U * (coeffs.array() * g_modes.array()).matrix();
}

Vector matching_drift_real(const Objective& obj, const Vector& x, double eta,
                           const char* who) {
  return matching_drift_real_with(obj, eig_sym(obj.hessian(x)), x, eta, who);
}

Matrix diffusion_sq_with(const EigenDecomposition& d, const Matrix& Sigma,
                         double eta) {
  const Eigen::Index n = d.lambda.size();
  const Matrix Sigma_t = d.U.transpose() * Sigma * d.U;
  Matrix S(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double a = diffusion_kernel(eta * d.lambda(i), eta * d.lambda(j));
      S(i, j) = eta * Sigma_t(i, j) * a;
      S(j, i) = eta * Sigma_t(j, i) * a;
    }
  }
  return symmetrized(d.U * S * d.U.transpose());
}

// Complex constant-coefficient drift matrix U diag(log(1 - eta l)/eta) U^T.
ComplexMatrix matching_drift_matrix(const EigenDecomposition& d, double eta) {
  const Eigen::Index n = d.lambda.size();
  ComplexVector s(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = eta * d.lambda(i);
    if (z == 1.0) {
      throw SingularStepsize("drift matrix undefined at eta * lambda == 1");
    }
    s(i) = complex_log(Complex(1.0 - z, 0.0)) / eta;
  }
  const ComplexMatrix Uc = d.U.cast<Complex>();
  return Uc * s.asDiagonal() * Uc.transpose();
}

const QuadraticObjective* as_quadratic(const Objective& obj) {
  return dynamic_cast<const QuadraticObjective*>(&obj);
}

}  // namespace

SdeModel build_spf(const Objective& obj, NoiseModelPtr noise, double eta) {
  if (eta <= 0.0) {
    throw DomainError("build_spf: eta must be positive");
  }
  SdeModel m = build_sme1(obj, noise, eta);  // diffusion fields are shared
  m.name = "spf";
  const Objective* o = &obj;
  const QuadraticObjective* quad = as_quadratic(obj);
  if (quad != nullptr && noise->constant()) {
    const EigenDecomposition d = eig_sym(quad->A());
    const bool supercritical = (eta * d.lambda.array() > 1.0).any();
    if (supercritical) {
      m.mode = SdeMode::complex_quadratic;
      m.drift_matrix = matching_drift_matrix(d, eta);
      m.diffusion_matrix =
          psd_sqrt(Matrix(eta * noise->covariance(Vector::Zero(m.dim))))
              .cast<Complex>();
      return m;
    }
    // Constant real drift matrix; precompute once.
    const Matrix B = matching_drift_matrix(d, eta).real();
    m.drift = [B](const Vector& x) { return Vector(B * x); };
    return m;
  }
  m.drift = [o, eta](const Vector& x) {
    return matching_drift_real(*o, x, eta, "build_spf");
  };
  return m;
}

SdeModel build_hasme(const Objective& obj, NoiseModelPtr noise, double eta,
                     SdeMode mode) {
  if (eta <= 0.0) {
    throw DomainError("build_hasme: eta must be positive");
  }
  SdeModel m;
  m.name = "hasme";
  m.dim = obj.dim();
  m.eta = eta;
  m.mode = mode;
  const Objective* o = &obj;

  if (mode == SdeMode::complex_quadratic) {
    const QuadraticObjective* quad = as_quadratic(obj);
    if (quad == nullptr || !noise->constant()) {
      throw NotWellPosed(
          "build_hasme: complex mode requires a quadratic objective with "
          "constant noise covariance");
    }
    const MatchResult match =
        complex_match_D(quad->A(), noise->covariance(Vector::Zero(m.dim)), eta);
    if (!match.matchable) {
      std::ostringstream msg;
      msg << "build_hasme: no matching diffusion factor exists (target min "
          << "eigenvalue " << match.min_eig << ", max imaginary entry "
          << match.max_imag << ")";
      throw NotWellPosed(msg.str());
    }
    m.drift_matrix = matching_drift_matrix(match.basis, eta);
    m.diffusion_matrix = match.D.cast<Complex>();
    return m;
  }

  const QuadraticObjective* quad = as_quadratic(obj);
  if (quad != nullptr && noise->constant()) {
    // Constant coefficients: evaluate the fields once.
    const EigenDecomposition d = eig_sym(quad->A());
    if ((eta * d.lambda.array() > 1.0).any()) {
      throw NotWellPosed(
          "build_hasme: a mode has eta * lambda > 1, so the real-valued "
          "model does not exist; use the complex mode");
    }
    const Matrix B = matching_drift_matrix(d, eta).real();
    const Vector origin = Vector::Zero(m.dim);
    const Matrix dsq = hasme_diffusion_sq(obj, *noise, origin, eta);
    Matrix droot;
    try {
      droot = psd_sqrt(dsq);
    } catch (const NotPSD& e) {
      throw NotWellPosed(std::string("build_hasme: diffusion-squared is not "
                                     "PSD: ") +
                         e.what());
    }
    m.drift = [B](const Vector& x) { return Vector(B * x); };
    m.diffusion_sq = [dsq](const Vector&) { return dsq; };
    m.diffusion = [droot](const Vector&) { return droot; };
    return m;
  }

  auto cache = std::make_shared<DecompCache>();
  m.drift = [o, eta, cache](const Vector& x) {
    const EigenDecomposition d = cached_decomp(*cache, *o, x);
    return matching_drift_real_with(*o, d, x, eta, "build_hasme");
  };
  auto dsq_field = [o, noise, eta, cache](const Vector& x) {
    const EigenDecomposition d = cached_decomp(*cache, *o, x);
    require_subcritical(*o, d, eta, "build_hasme");
    return diffusion_sq_with(d, noise->covariance(x), eta);
  };
  m.diffusion_sq = dsq_field;
  m.diffusion = [dsq_field](const Vector& x) {
    try {
      return psd_sqrt(dsq_field(x));
    } catch (const NotPSD& e) {
      throw NotWellPosed(
          std::string("build_hasme: diffusion-squared is not PSD: ") +
          e.what());
    }
  };
  return m;
}

}  // namespace sgdsde
