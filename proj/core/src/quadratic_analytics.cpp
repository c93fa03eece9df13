#include "sgdsde/quadratic_analytics.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "sgdsde/errors.hpp"

namespace sgdsde {

namespace {

// Geometric sum 1 + r + ... + r^{k-1} with the r -> 1 degeneracy handled.
double geometric_sum(double r, int k) {
  if (r == 1.0) {
    return static_cast<double>(k);
  }
  if (std::abs(r - 1.0) < 1e-9) {
    // Two-term expansion around r = 1; the quadratic remainder is
    // O(k^3 (r-1)^2), negligible at the k used here.
    return k * (1.0 + 0.5 * (k - 1) * (r - 1.0));
  }
  return (std::pow(r, k) - 1.0) / (r - 1.0);
}

// (e^{t w} - 1)/w with the analytic limit t at w -> 0.
Complex expm1_over(Complex w, double t) {
  if (std::abs(w) < 1e-10) {
    return Complex(t, 0.0);
  }
  return (std::exp(t * w) - 1.0) / w;
}

double real_expm1_over(double w, double t) {
  if (std::abs(w * t) < 1e-12) {
    return t;
  }
  return std::expm1(t * w) / w;
}

Matrix symmetrized(const Matrix& M) { return (M + M.transpose()) / 2.0; }

// OU law with drift matrix -U diag(rates) U^T and diffusion sqrt(eta sigma2) I:
//   mean U e^{-rates t} U^T x0,
//   cov  eta sigma2 U diag((1 - e^{-2 rates t})/(2 rates)) U^T.
GaussianLaw ou_isotropic_law(const EigenDecomposition& d, const Vector& rates,
                             double sigma2, double eta, const Vector& x0,
                             double t) {
  const Vector y0 = d.U.transpose() * x0;
  Vector mean_modes(rates.size());
  Vector var_modes(rates.size());
  for (Eigen::Index i = 0; i < rates.size(); ++i) {
    mean_modes(i) = std::exp(-rates(i) * t) * y0(i);
    // (1 - e^{-2 mu t}) / (2 mu) = (e^{-2 mu t} - 1)/(-2 mu), limit t at mu=0.
    var_modes(i) = eta * sigma2 * real_expm1_over(-2.0 * rates(i), t);
  }
  GaussianLaw law;
  law.mean = d.U * mean_modes;
  law.cov = symmetrized(d.U * var_modes.asDiagonal() * d.U.transpose());
  return law;
}

}  // namespace

GaussianLaw sgd_law(const Matrix& A, const Matrix& Sigma, double eta,
                    const Vector& x0, int k) {
  if (k < 0) {
    throw DomainError("sgd_law: k must be >= 0");
  }
  const EigenDecomposition d = eig_sym(A);
  if (k == 0) {
    return GaussianLaw{x0, Matrix::Zero(A.rows(), A.cols())};
  }
  const Eigen::Index n = A.rows();
  const Vector y0 = d.U.transpose() * x0;
  Vector mean_modes(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    mean_modes(i) = std::pow(1.0 - eta * d.lambda(i), k) * y0(i);
  }
  const Matrix Sigma_t = d.U.transpose() * Sigma * d.U;
  Matrix cov_t(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double r = (1.0 - eta * d.lambda(i)) * (1.0 - eta * d.lambda(j));
      cov_t(i, j) = eta * eta * Sigma_t(i, j) * geometric_sum(r, k);
    }
  }
  GaussianLaw law;
  law.mean = d.U * mean_modes;
  law.cov = symmetrized(d.U * cov_t * d.U.transpose());
  return law;
}

GaussianLaw sme1_law(const Matrix& A, double sigma2, double eta,
                     const Vector& x0, double t) {
  const EigenDecomposition d = eig_sym(A);
  return ou_isotropic_law(d, d.lambda, sigma2, eta, x0, t);
}

GaussianLaw sme2_law(const Matrix& A, double sigma2, double eta,
                     const Vector& x0, double t) {
  const EigenDecomposition d = eig_sym(A);
  Vector rates(d.lambda.size());
  for (Eigen::Index i = 0; i < d.lambda.size(); ++i) {
    rates(i) = d.lambda(i) + 0.5 * eta * d.lambda(i) * d.lambda(i);
  }
  return ou_isotropic_law(d, rates, sigma2, eta, x0, t);
}

GaussianLaw spf_law(const Matrix& A, double sigma2, double eta,
                    const Vector& x0, double t) {
  const EigenDecomposition d = eig_sym(A);
  const Eigen::Index n = d.lambda.size();
  ComplexVector s(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = eta * d.lambda(i);
    if (z == 1.0) {
      throw SingularStepsize("spf_law: eta * lambda == 1");
    }
    try {
      s(i) = complex_log(Complex(1.0 - z, 0.0)) / eta;
    } catch (const LogOfZero&) {
      throw SingularStepsize("spf_law: eta * lambda == 1");
    }
  }
  const Vector y0 = d.U.transpose() * x0;
  ComplexVector mean_modes(n);
  ComplexVector var_modes(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    mean_modes(i) = std::exp(s(i) * t) * y0(i);
    // eta sigma2 (e^{2 s t} - 1)/(2 s), limit eta sigma2 t at s -> 0.
    var_modes(i) = eta * sigma2 * expm1_over(2.0 * s(i), t);
  }
  const ComplexMatrix Uc = d.U.cast<Complex>();
  const ComplexVector mean_c = Uc * mean_modes;
  const ComplexMatrix cov_c = Uc * var_modes.asDiagonal() * Uc.transpose();
  const double scale =
      std::max(1.0, std::max(max_abs(mean_c), max_abs(cov_c)));
  const double residue =
      std::max(max_abs(Vector(mean_c.imag())), max_abs(Matrix(cov_c.imag())));
  if (residue > 1e-9 * scale) {
    std::ostringstream msg;
    msg << "spf_law: imaginary residue " << residue
        << " exceeds 1e-9 of scale " << scale
        << " (law is not real at this time)";
    throw DomainError(msg.str());
  }
  GaussianLaw law;
  law.mean = mean_c.real();
  law.cov = symmetrized(cov_c.real());
  return law;
}

ComplexGaussianLaw complex_ou_law(const Matrix& U, const ComplexVector& S,
                                  const ComplexMatrix& D, double t,
                                  const Vector& x0) {
  const Eigen::Index n = U.rows();
  const double orth =
      max_abs(Matrix(U.transpose() * U - Matrix::Identity(n, n)));
  if (orth > 1e-10) {
    std::ostringstream msg;
    msg << "complex_ou_law: basis orthogonality residual " << orth
        << " exceeds 1e-10";
    throw NonOrthogonalBasis(msg.str());
  }
  const ComplexMatrix Uc = U.cast<Complex>();

  ComplexVector mean_modes = Uc.transpose() * x0.cast<Complex>();
  for (Eigen::Index i = 0; i < n; ++i) {
    mean_modes(i) *= std::exp(S(i) * t);
  }

  const ComplexMatrix G = Uc.transpose() * (D * D.adjoint()) * Uc;
  const ComplexMatrix P = Uc.transpose() * (D * D.transpose()) * Uc;
  ComplexMatrix Gamma_t(n, n);
  ComplexMatrix C_t(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      Gamma_t(i, j) = G(i, j) * expm1_over(S(i) + std::conj(S(j)), t);
      C_t(i, j) = P(i, j) * expm1_over(S(i) + S(j), t);
    }
  }
  ComplexGaussianLaw law;
  law.mean = Uc * mean_modes;
  law.Gamma = Uc * Gamma_t * Uc.transpose();
  law.C = Uc * C_t * Uc.transpose();
  // Clean round-off: Gamma must be Hermitian, C symmetric, by construction.
  law.Gamma = ((law.Gamma + law.Gamma.adjoint()) / 2.0).eval();
  law.C = ((law.C + law.C.transpose()) / 2.0).eval();
  return law;
}

MatchResult complex_match_D(const Matrix& A, const Matrix& Sigma, double eta) {
  MatchResult res;
  res.basis = eig_sym(A);
  const Eigen::Index n = A.rows();
  const Matrix Sigma_t = res.basis.U.transpose() * Sigma * res.basis.U;

  ComplexVector l(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = eta * res.basis.lambda(i);
    if (z == 1.0) {
      throw SingularStepsize("complex_match_D: eta * lambda == 1");
    }
    l(i) = complex_log(Complex(1.0 - z, 0.0));
  }

  // Target M_ij = Sigma_t_ij (l_i + conj(l_j)) / (eta li lj - li - lj)
  //             = eta Sigma_t_ij (l_i + conj(l_j)) / d_ij,
  // d_ij = (eta li)(eta lj) - eta li - eta lj. Near d = 0 both modes are on
  // the same side of the critical stepsize, the numerator equals
  // log(1 + d), and the ratio is evaluated by its series.
  ComplexMatrix M(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double x = eta * res.basis.lambda(i);
      const double y = eta * res.basis.lambda(j);
      const double d = x * y - x - y;
      Complex factor;
      if (std::abs(d) < 1e-6) {
        double series = 0.0;
        double dk = 1.0;
        for (int kk = 0; kk <= 12; ++kk) {
          series += dk / static_cast<double>(kk + 1);
          dk *= -d;
        }
        factor = Complex(eta * series, 0.0);
      } else {
        factor = eta * (l(i) + std::conj(l(j))) / d;
      }
      M(i, j) = Sigma_t(i, j) * factor;
    }
  }
  M = ((M + M.adjoint()) / 2.0).eval();  // Hermitian by construction

  res.max_imag = max_abs(Matrix(M.imag()));
  res.M = symmetrized(M.real());
  const double scale = std::max(1.0, max_abs(res.M));

  Eigen::SelfAdjointEigenSolver<ComplexMatrix> herm(M);
  if (herm.info() != Eigen::Success) {
    throw NoConvergence("complex_match_D: eigensolver did not converge");
  }
  res.min_eig = herm.eigenvalues().minCoeff();

  if (res.max_imag > 1e-10 * scale) {
    res.matchable = false;  // target is genuinely complex: no real factor
    return res;
  }
  if (res.min_eig < -1e-10 * scale) {
    res.matchable = false;  // target indefinite: no factor at all
    return res;
  }
  res.matchable = true;
  res.D = res.basis.U * psd_sqrt(res.M, 1e-9 * scale);
  return res;
}

GaussianLaw hasme_law_quadratic(const Matrix& A, const Matrix& Sigma,
                                double eta, const Vector& x0, int k) {
  if (k < 0) {
    throw DomainError("hasme_law_quadratic: k must be >= 0");
  }
  const MatchResult match = complex_match_D(A, Sigma, eta);
  if (!match.matchable) {
    std::ostringstream msg;
    msg << "hasme_law_quadratic: no matching diffusion factor exists "
        << "(target min eigenvalue " << match.min_eig
        << ", max imaginary entry " << match.max_imag << ")";
    throw MatchConditionsViolated(msg.str());
  }
  const Eigen::Index n = A.rows();
  ComplexVector S(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    S(i) = complex_log(Complex(1.0 - eta * match.basis.lambda(i), 0.0)) / eta;
  }
  const ComplexGaussianLaw law =
      complex_ou_law(match.basis.U, S, match.D.cast<Complex>(),
                     static_cast<double>(k) * eta, x0);
  const GaussianLaw target = sgd_law(A, Sigma, eta, x0, k);

  // The match is a theorem about this construction; assert it rather than
  // assume it.
  const double mean_scale = std::max(1.0, max_abs(target.mean));
  const double cov_scale = std::max(1.0, max_abs(target.cov));
  const double mean_err =
      std::max(max_abs(Vector((law.mean.real() - target.mean))),
               max_abs(Vector(law.mean.imag())));
  const double cov_err =
      std::max(max_abs(Matrix(law.Gamma.real() - target.cov)),
               max_abs(Matrix(law.Gamma.imag())));
  if (mean_err > 1e-9 * mean_scale || cov_err > 1e-9 * cov_scale) {
    std::ostringstream msg;
    msg << "hasme_law_quadratic: law does not reproduce the SGD law "
        << "(mean error " << mean_err << ", covariance error " << cov_err
        << ")";
    throw MatchConditionsViolated(msg.str());
  }
  return GaussianLaw{law.mean.real(), symmetrized(law.Gamma.real())};
}

bool desideratum_check(const ComplexGaussianLaw& cl, const GaussianLaw& rl) {
  if (cl.mean.size() != rl.mean.size() || cl.Gamma.rows() != rl.cov.rows()) {
    throw WrongShape("desideratum_check: dimension mismatch");
  }
  auto close = [](double a, double b) {
    return std::abs(a - b) <= 1e-8 + 1e-8 * std::max(std::abs(a), std::abs(b));
  };
  for (Eigen::Index i = 0; i < rl.mean.size(); ++i) {
    if (!close(cl.mean(i).real(), rl.mean(i)) || !close(cl.mean(i).imag(), 0.0)) {
      return false;
    }
  }
  for (Eigen::Index i = 0; i < rl.cov.rows(); ++i) {
    for (Eigen::Index j = 0; j < rl.cov.cols(); ++j) {
      if (!close(cl.Gamma(i, j).real(), rl.cov(i, j)) ||
          !close(cl.Gamma(i, j).imag(), 0.0) ||
          !close(cl.C(i, j).real(), rl.cov(i, j)) ||
          !close(cl.C(i, j).imag(), 0.0)) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace sgdsde
