#pragma once

// Formal power-series coefficients of the stepsize expansion behind the
// Hessian-aware diffusion model:
//
//   c_s           from log(1-x)/x         = sum_s c_s x^s
//   a_{s,m}       from log((1-x)(1-y)) / (xy - x - y) = sum a_{s,m} x^s y^m
//   b_{s,m}       antisymmetric companion family defined by a multinomial
//                 recursion over compositions of c-coefficients
//
// plus the truncated drift / diffusion-squared series they generate for a
// general objective. The a-table is computed by series division and verified
// in-construction against an independent recursion: two routes, one truth.
// Arithmetic is exact rational up to order 20 and 50-digit floating point
// beyond (the recursions cancel catastrophically in double precision).

#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "sgdsde/problems.hpp"
#include "sgdsde/types.hpp"

namespace sgdsde {

using Rational = boost::multiprecision::cpp_rational;
using BigFloat = boost::multiprecision::cpp_bin_float_50;

// c_s = -1/(s+1), exact.
Rational c_coeff(int s);

// Square (order+1) x (order+1) coefficient table. Entries are stored either
// as exact rationals (order <= 20) or 50-digit floats (beyond).
class Series2D {
 public:
  Series2D(int order, std::vector<Rational> exact);
  Series2D(int order, std::vector<BigFloat> wide);

  int order() const { return order_; }
  bool is_exact() const { return !exact_.empty(); }

  // Exact entry; only valid for rational storage.
  const Rational& exact_at(int s, int m) const;
  // Entry widened to 50-digit precision (works for both storages).
  BigFloat wide_at(int s, int m) const;
  // Entry rounded to double.
  double at(int s, int m) const;

 private:
  int idx(int s, int m) const;
  int order_;
  std::vector<Rational> exact_;
  std::vector<BigFloat> wide_;
};

// Taylor table of log((1-x)(1-y))/(xy-x-y) about the origin, a_{0,0} = 1.
// Computed by series division; the boundary equations the division leaves
// over-determined (column 0 must equal 1/(s+1)) and an independent
// multinomial recursion are both checked in-construction, throwing
// PrecisionLoss if any residual exceeds 1e-20. Requires P <= 40.
Series2D a_coeff_table(int P);

// Antisymmetric companion table: b_{s,m} + b_{m,s} = 0 for s+m >= 1,
// b_{0,0} = 1/2. Computed from the multinomial recursion over powers of
// c(x) = log(1-x)/x. Requires P <= 20 (the sums grow factorially).
Series2D b_coeff_table(int P);

// Drift series truncated at order P:  sum_{p=0}^{P} eta^p c_p (H^p) grad f,
// evaluated at x with H = hessian(x).
Vector truncated_drift(const Objective& obj, const Vector& x, double eta,
                       int P);

// Diffusion-squared series truncated at order P:
//   sum_{p=1}^{P} eta^p sum_{k=0}^{p-1} a_{k,p-1-k} H^k Sigma(x) H^{p-1-k}.
Matrix truncated_diffusion_sq(const Objective& obj, const NoiseModel& noise,
                              const Vector& x, double eta, int P);

}  // namespace sgdsde
