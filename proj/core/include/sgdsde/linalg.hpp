#pragma once

// Dense symmetric-matrix kernels shared by every other module: symmetric
// eigendecomposition with a deterministic sign convention, principal PSD
// square roots, the principal-branch complex logarithm, and matrix functions
// applied in an eigenbasis.

#include <functional>

#include "sgdsde/errors.hpp"
#include "sgdsde/types.hpp"

namespace sgdsde {

struct EigenDecomposition {
  Matrix U;       // orthogonal; columns are eigenvectors
  Vector lambda;  // eigenvalues, ascending
};

// Symmetric eigendecomposition A = U diag(lambda) U^T.
//   - requires ||A - A^T||_max <= 1e-12 * ||A||_max   (throws NonSymmetric)
//   - eigenvalues ascending; each eigenvector's first component of magnitude
//     above 1e-12 of its largest is made positive, so the decomposition is
//     deterministic for a given input
//   - validates ||U^T U - I||_max <= 1e-10 and the reconstruction residual
//     ||U diag(lambda) U^T - A||_max <= 1e-9 * ||A||_max  (throws NoConvergence)
EigenDecomposition eig_sym(const Matrix& A);

// Principal square root of a symmetric PSD matrix: the symmetric D with
// D D^T = M. Eigenvalues in [-tol, 0) are clamped to zero; below -tol throws
// NotPSD. A negative tol requests the default 1e-10 * ||M||_max.
Matrix psd_sqrt(const Matrix& M, double tol = -1.0);

// Principal-branch complex logarithm with Im in (-pi, pi]; the branch cut
// maps the negative real axis to +i*pi. Throws LogOfZero at 0.
Complex complex_log(Complex z);

// U phi(Lambda) U^T for a scalar function phi applied to the spectrum.
// Throws DomainError if phi produces a non-finite value at some eigenvalue.
ComplexMatrix eigen_fn(const EigenDecomposition& decomp,
                       const std::function<Complex(double)>& phi);

// Real-output variant: additionally requires every phi(lambda_i) to have
// |imaginary part| <= im_tol (throws DomainError otherwise).
Matrix eigen_fn_real(const EigenDecomposition& decomp,
                     const std::function<Complex(double)>& phi,
                     double im_tol = 1e-12);

}  // namespace sgdsde
