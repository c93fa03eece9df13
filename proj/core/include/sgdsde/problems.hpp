#pragma once

// Objective-function oracles (value / gradient / Hessian), gradient-noise
// models, and dataset ingestion for the classifier experiment.

#include <memory>
#include <string>
#include <vector>

#include "sgdsde/rng.hpp"
#include "sgdsde/types.hpp"

namespace sgdsde {

class Objective {
 public:
  virtual ~Objective() = default;
  virtual int dim() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  virtual Matrix hessian(const Vector& x) const = 0;
  // Hessian-vector product; the default assembles hessian(x) and multiplies.
  // High-dimensional objectives override with a cheaper scheme.
  virtual Vector hessian_vec(const Vector& x, const Vector& v) const;
  // True when hessian(x) does not depend on x; lets closed-form code skip
  // re-evaluation.
  virtual bool constant_hessian() const { return false; }
};

// f(x) = 0.5 x^T A x with symmetric A.
class QuadraticObjective : public Objective {
 public:
  explicit QuadraticObjective(Matrix A);
  int dim() const override { return static_cast<int>(A_.rows()); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Matrix hessian(const Vector& x) const override;
  Vector hessian_vec(const Vector& x, const Vector& v) const override;
  bool constant_hessian() const override { return true; }
  const Matrix& A() const { return A_; }

 private:
  Matrix A_;
};

// One-dimensional double-well assembled from three quadratic pieces:
//   0.5 x^2              for x < 1
//   -0.5 (x-2)^2 + 1     for 1 <= x < 3
//   0.25 (x-5)^2 - 0.5   for x >= 3
// Value and gradient are continuous at the joins; the second derivative
// jumps there and is taken from the left piece.
class BimodalPiecewise : public Objective {
 public:
  int dim() const override { return 1; }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Matrix hessian(const Vector& x) const override;
};

struct Dataset {
  Matrix features;          // one row per sample
  std::vector<int> labels;  // class ids in 0..n_classes-1
  int n_classes = 0;
};

// Loads the iris CSV: four numeric feature columns and a species label
// (setosa / versicolor / virginica, case-insensitive), optional header row.
// Features are standardized to zero mean and unit variance per column.
// Throws ParseError (naming row and column) on malformed cells, WrongShape
// on wrong column counts, unknown labels, or a row count other than 150.
Dataset load_iris(const std::string& path);

// Two-hidden-layer sigmoid network (4 -> 10 -> 10 -> 3) with softmax output
// and mean cross-entropy loss over the dataset; the optimization variable is
// the flattened parameter vector (193 entries).
class MlpClassifier : public Objective {
 public:
  explicit MlpClassifier(Dataset data);
  int dim() const override { return 193; }
  double value(const Vector& theta) const override;
  Vector gradient(const Vector& theta) const override;
  // One-sided finite differences of the gradient with per-coordinate step
  // 1e-6 (1 + |theta_i|), symmetrized.
  Matrix hessian(const Vector& theta) const override;
  // Directional central difference of the gradient; two gradient
  // evaluations instead of a full Hessian assembly.
  Vector hessian_vec(const Vector& theta, const Vector& v) const override;
  // Seeded uniform(-0.5, 0.5) parameter initialization.
  Vector initial_point(std::uint64_t seed) const;

 private:
  Dataset data_;
  Matrix features_t_;  // features transposed, one sample per column
  Matrix onehot_;      // one-hot labels, one sample per column
};

// Symmetrized central finite differences of the gradient:
//   H_ij ~ (grad(x + h_j e_j) - grad(x - h_j e_j))_i / (2 h_j),
// with per-coordinate step h_j = max(h, h |x_j|), then (H + H^T)/2.
Matrix hessian_fd(const Objective& obj, const Vector& x, double h);

// Additive gradient-noise oracle: covariance Sigma(x) plus a Gaussian
// sampler drawing xi with mean zero and covariance Sigma(x).
class NoiseModel {
 public:
  virtual ~NoiseModel() = default;
  virtual int dim() const = 0;
  virtual Matrix covariance(const Vector& x) const = 0;
  virtual Vector sample(const Vector& x, CounterRng& rng) const = 0;
  // True when covariance(x) does not depend on x.
  virtual bool constant() const { return false; }
};

using NoiseModelPtr = std::shared_ptr<const NoiseModel>;

// Sigma(x) = sigma2 * I. Throws NegativeVariance if sigma2 < 0.
NoiseModelPtr make_isotropic_noise(int dim, double sigma2);

// Constant symmetric PSD covariance; the sampler uses the principal square
// root. Construction errors (NonSymmetric / NotPSD) propagate.
NoiseModelPtr make_constant_noise(const Matrix& Sigma);

}  // namespace sgdsde
