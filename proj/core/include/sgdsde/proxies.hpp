#pragma once

// Constructors for the four diffusion proxies of constant-stepsize SGD, each
// packaged as an SdeModel holding drift and diffusion fields:
//
//   sme1   drift -grad f,                    diffusion^2 = eta Sigma
//   sme2   drift -grad f - (eta/2) H grad f, diffusion^2 = eta Sigma
//   spf    drift U log(I - eta L)/(eta L) U^T grad f, diffusion^2 = eta Sigma
//   hasme  same drift, diffusion^2 = U S U^T with
//          S_ij = eta [U^T Sigma U]_ij a(eta l_i, eta l_j),
//          a(x,y) = log((1-x)(1-y)) / (xy - x - y)
//
// where H = hessian(x) = U diag(L) U^T. The Hessian-aware diffusion makes
// the model's Gaussian law on quadratics coincide with the SGD iterate law;
// on a stepsize-supercritical quadratic (some eta lambda > 1) that requires
// the complex-coefficient mode.

#include <functional>
#include <string>

#include "sgdsde/problems.hpp"
#include "sgdsde/types.hpp"

namespace sgdsde {

enum class SdeMode { real, complex_quadratic };

struct SdeModel {
  std::string name;
  int dim = 0;
  double eta = 0.0;
  SdeMode mode = SdeMode::real;

  // Real mode: state-dependent fields. diffusion(x) is a factor D with
  // D D^T = diffusion_sq(x) (symmetric principal root).
  std::function<Vector(const Vector&)> drift;
  std::function<Matrix(const Vector&)> diffusion_sq;
  std::function<Matrix(const Vector&)> diffusion;

  // Complex mode (quadratics with constant noise only): the model is the
  // constant-coefficient linear SDE dZ = B Z dt + D dW with real Brownian W.
  ComplexMatrix drift_matrix;
  ComplexMatrix diffusion_matrix;
};

// The scalar drift coefficient log(1-z)/z with the z -> 0 limit -1;
// complex (principal branch) when z > 1. Throws SingularStepsize at z == 1.
Complex sgd_matching_drift_coeff(double z);

// The scalar diffusion kernel a(x,y) = log((1-x)(1-y))/(xy-x-y), evaluated
// as log1p(d)/d with d = xy-x-y, by series when |d| < 1e-6 (a(0,0) = 1).
// Throws SingularStepsize when (1-x)(1-y) == 0 and NotWellPosed when the
// product is negative (one mode sub-, one supercritical: the kernel turns
// complex and no real diffusion exists).
double diffusion_kernel(double x, double y);

SdeModel build_sme1(const Objective& obj, NoiseModelPtr noise, double eta);
SdeModel build_sme2(const Objective& obj, NoiseModelPtr noise, double eta);

// Shares the SGD-matching drift; keeps the unmodified diffusion eta Sigma.
// On quadratics with constant noise and some eta lambda > 1 the model is
// built in complex mode; elsewhere eta ||H(x)|| < 1 is required at every
// evaluated point.
SdeModel build_spf(const Objective& obj, NoiseModelPtr noise, double eta);

// Drift field b(x) = U diag(log(1 - eta l_i)/(eta l_i)) U^T grad f(x);
// complex entries appear when some eta l_i > 1.
ComplexVector hasme_drift(const Objective& obj, const Vector& x, double eta);

// Diffusion-squared field U S U^T (see header comment); real and symmetric
// whenever no sub/supercritical mode pair couples.
Matrix hasme_diffusion_sq(const Objective& obj, const NoiseModel& noise,
                          const Vector& x, double eta);

struct ExistenceReport {
  bool commuting = false;      // hessian and covariance commute at x
  bool psd = false;            // diffusion-squared is PSD at x (>= -1e-10)
  double eta_threshold = 0.0;  // stepsize bound that guarantees psd
  double min_eig = 0.0;        // smallest eigenvalue of diffusion-squared
  double commutator_residual = 0.0;
};

// Diagnostics at a point: commutation test ||H Sigma - Sigma H||_max against
// 1e-8 of scale, PSD test on the diffusion-squared, and the sufficient
// stepsize threshold
//   (1/||H||) min{1 - sqrt(1 - lmin(Sigma)/(sqrt(d) lmax(Sigma))), 1 - sqrt(2)/2}.
ExistenceReport hasme_existence_check(const Objective& obj,
                                      const NoiseModel& noise, const Vector& x,
                                      double eta);

// Commuting-case diffusion factor in the Hessian eigenbasis: diagonal D with
//   D_ii = sqrt(sigma2_i * log((1 - eta lambda_i)^2) / (eta lambda_i^2 - 2 lambda_i)),
// the lambda -> 0 mode taking the limit sqrt(eta sigma2_i). The radicand is
// the same per-mode kernel as hasme_diffusion_sq and is nonnegative for
// every eta lambda != 1. Inputs are the Hessian eigenvalues and the diagonal
// of the noise covariance in the eigenbasis.
Matrix commuting_diffusion(const Vector& lambda, const Vector& sigma2_diag,
                           double eta);

// mode == real: drift/diffusion field evaluation; refuses (NotWellPosed)
// non-quadratic objectives at points with eta ||H(x)|| >= 1, and any point
// where the diffusion-squared fails its PSD check.
// mode == complex_quadratic: requires a QuadraticObjective and constant
// noise; the diffusion factor solves the covariance-matching equation
// (NotWellPosed when no factor exists).
SdeModel build_hasme(const Objective& obj, NoiseModelPtr noise, double eta,
                     SdeMode mode = SdeMode::real);

}  // namespace sgdsde
