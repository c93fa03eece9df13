#pragma once

// Exact distributional laws on quadratic objectives f(x) = 0.5 x^T A x with
// additive Gaussian gradient noise: the SGD iterate law, the
// Ornstein-Uhlenbeck laws of the three classical diffusion proxies, the
// complex OU covariance / pseudo-covariance machinery, and the construction
// of the diffusion factor that makes the Hessian-aware model reproduce the
// SGD law exactly (when such a factor exists).

#include "sgdsde/linalg.hpp"
#include "sgdsde/types.hpp"

namespace sgdsde {

struct GaussianLaw {
  Vector mean;
  Matrix cov;
};

// Complex Gaussian: covariance Gamma = E[(z-mu)(z-mu)^H] (Hermitian PSD) and
// pseudo-covariance C = E[(z-mu)(z-mu)^T] (symmetric).
struct ComplexGaussianLaw {
  ComplexVector mean;
  ComplexMatrix Gamma;
  ComplexMatrix C;
};

// Law of the SGD iterate x_k = (I - eta A) x_{k-1} - eta xi_{k-1}:
//   mean (I - eta A)^k x0,
//   cov  eta^2 sum_{m<k} (I - eta A)^m Sigma (I - eta A)^m,
// evaluated elementwise in the eigenbasis of A (geometric sums, no matrix
// powers).
GaussianLaw sgd_law(const Matrix& A, const Matrix& Sigma, double eta,
                    const Vector& x0, int k);

// OU law of dX = -A X dt + sqrt(eta sigma2) dW at time t (isotropic noise).
GaussianLaw sme1_law(const Matrix& A, double sigma2, double eta,
                     const Vector& x0, double t);

// Same with the second-order drift matrix A + (eta/2) A^2.
GaussianLaw sme2_law(const Matrix& A, double sigma2, double eta,
                     const Vector& x0, double t);

// OU law with per-mode rate log(1 - eta lambda)/eta and diffusion
// sqrt(eta sigma2); supercritical modes (eta lambda > 1) follow the same
// formulas through the complex logarithm, and the law is returned when the
// imaginary residue is below 1e-9 of scale (DomainError otherwise).
// Throws SingularStepsize when some eta lambda == 1.
GaussianLaw spf_law(const Matrix& A, double sigma2, double eta,
                    const Vector& x0, double t);

// Law at time t of dZ = B Z dt + D dW driven by real Brownian motion, for
// B = U diag(S) U^T with U real orthogonal (throws NonOrthogonalBasis when
// ||U^T U - I||_max > 1e-10):
//   Gamma(t), C(t) entrywise via (e^{t(s_i + conj(s_j))} - 1)/(s_i + conj(s_j))
//   and (e^{t(s_i+s_j)} - 1)/(s_i+s_j), with the |denominator| < 1e-10
//   degeneracy replaced by its analytic limit t.
ComplexGaussianLaw complex_ou_law(const Matrix& U, const ComplexVector& S,
                                  const ComplexMatrix& D, double t,
                                  const Vector& x0);

// Result of solving the covariance-matching equation for the diffusion
// factor: the target matrix M = (U^T D)(U^T D)^H built from
//   M_ij = [U^T Sigma U]_ij (l_i + conj(l_j)) / (eta lambda_i lambda_j
//          - lambda_i - lambda_j),          l_i = log(1 - eta lambda_i),
// is real symmetric PSD exactly when a matching factor exists; then
// D = U sqrt(M).
struct MatchResult {
  bool matchable = false;
  Matrix D;           // real matched factor (valid when matchable)
  Matrix M;           // real part of the target matrix
  double min_eig = 0; // smallest eigenvalue of the Hermitian target
  double max_imag = 0;  // largest |Im| entry of the target
  EigenDecomposition basis;  // eigendecomposition of A used in the build
};

// Throws SingularStepsize when some eta lambda_i == 1.
MatchResult complex_match_D(const Matrix& A, const Matrix& Sigma, double eta);

// The Hessian-aware model's law at t = k eta on a quadratic, built through
// complex_ou_law with the matched diffusion factor and *asserted* equal to
// sgd_law in mean and covariance (1e-9 relative); returns that law.
// Throws MatchConditionsViolated when no factor exists or the comparison
// fails, SingularStepsize at eta lambda == 1.
GaussianLaw hasme_law_quadratic(const Matrix& A, const Matrix& Sigma,
                                double eta, const Vector& x0, int k);

// True iff the complex law collapses to the real law: Re(mean) = rl.mean,
// Im(mean) = 0, Gamma = C = rl.cov, all to 1e-8 absolute + 1e-8 relative.
bool desideratum_check(const ComplexGaussianLaw& cl, const GaussianLaw& rl);

}  // namespace sgdsde
