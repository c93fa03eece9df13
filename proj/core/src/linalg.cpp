#include "sgdsde/linalg.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace sgdsde {

namespace {

// Flip eigenvector signs so the first component whose magnitude is at least
// 1e-12 of the column's largest is positive. Makes U unique (up to degenerate
// eigenspaces) and therefore reproducible.
void normalize_column_signs(Matrix& U) {
  for (Eigen::Index j = 0; j < U.cols(); ++j) {
    const double colmax = U.col(j).cwiseAbs().maxCoeff();
    if (colmax == 0.0) {
      continue;
    }
    for (Eigen::Index i = 0; i < U.rows(); ++i) {
      if (std::abs(U(i, j)) > 1e-12 * colmax) {
        if (U(i, j) < 0.0) {
          U.col(j) = -U.col(j);
        }
        break;
      }
    }
  }
}

}  // namespace

EigenDecomposition eig_sym(const Matrix& A) {
  if (A.rows() != A.cols()) {
    std::ostringstream msg;
    msg << "eig_sym: matrix is " << A.rows() << "x" << A.cols()
        << ", expected square";
    throw NonSymmetric(msg.str());
  }
  const double scale = max_abs(A);
  const double asym = max_abs(Matrix(A - A.transpose()));
  if (asym > 1e-12 * scale) {
    std::ostringstream msg;
    msg << "eig_sym: asymmetry " << asym << " exceeds 1e-12 * " << scale;
    throw NonSymmetric(msg.str());
  }

  Eigen::SelfAdjointEigenSolver<Matrix> solver(A);
  if (solver.info() != Eigen::Success) {
    throw NoConvergence("eig_sym: eigensolver did not converge");
  }

  EigenDecomposition d;
  d.lambda = solver.eigenvalues();  // ascending
  d.U = solver.eigenvectors();
  normalize_column_signs(d.U);

  const double orth =
      max_abs(Matrix(d.U.transpose() * d.U - Matrix::Identity(A.rows(), A.cols())));
  if (orth > 1e-10) {
    std::ostringstream msg;
    msg << "eig_sym: orthogonality residual " << orth << " exceeds 1e-10";
    throw NoConvergence(msg.str());
  }
  const double recon =
      max_abs(Matrix(d.U * d.lambda.asDiagonal() * d.U.transpose() - A));
  if (recon > 1e-9 * scale && recon > 1e-300) {
    std::ostringstream msg;
    msg << "eig_sym: reconstruction residual " << recon << " exceeds 1e-9 * "
        << scale;
    throw NoConvergence(msg.str());
  }
  return d;
}

Matrix psd_sqrt(const Matrix& M, double tol) {
  const EigenDecomposition d = eig_sym(M);
  if (tol < 0.0) {
    tol = 1e-10 * max_abs(M);
  }
  Vector roots(d.lambda.size());
  for (Eigen::Index i = 0; i < d.lambda.size(); ++i) {
    const double ev = d.lambda(i);
    if (ev < -tol) {
      std::ostringstream msg;
      msg << "psd_sqrt: eigenvalue " << ev << " below -" << tol;
      throw NotPSD(msg.str());
    }
    roots(i) = ev > 0.0 ? std::sqrt(ev) : 0.0;
  }
  Matrix D = d.U * roots.asDiagonal() * d.U.transpose();
  D = ((D + D.transpose()) / 2.0).eval();  // kill round-off asymmetry
  return D;
}

Complex complex_log(Complex z) {
  if (z.real() == 0.0 && z.imag() == 0.0) {
    throw LogOfZero("complex_log: log(0) is undefined");
  }
  // Normalize a signed-zero imaginary part to +0 so the negative real axis
  // lands on the Im = +pi side of the branch cut.
  if (z.imag() == 0.0) {
    z = Complex(z.real(), +0.0);
  }
  return std::log(z);
}

ComplexMatrix eigen_fn(const EigenDecomposition& decomp,
                       const std::function<Complex(double)>& phi) {
  const Eigen::Index n = decomp.lambda.size();
  ComplexVector fvals(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Complex v = phi(decomp.lambda(i));
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      std::ostringstream msg;
      msg << "eigen_fn: function undefined (non-finite) at eigenvalue "
          << decomp.lambda(i);
      throw DomainError(msg.str());
    }
    fvals(i) = v;
  }
  const ComplexMatrix Uc = decomp.U.cast<Complex>();
  return Uc * fvals.asDiagonal() * Uc.transpose();
}

Matrix eigen_fn_real(const EigenDecomposition& decomp,
                     const std::function<Complex(double)>& phi,
                     double im_tol) {
  const ComplexMatrix R = eigen_fn(decomp, phi);
  const double im = max_abs(Matrix(R.imag()));
  if (im > im_tol) {
    std::ostringstream msg;
    msg << "eigen_fn_real: imaginary residue " << im << " exceeds " << im_tol;
    throw DomainError(msg.str());
  }
  return R.real();
}

}  // namespace sgdsde
