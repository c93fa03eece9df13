#include "sgdsde/problems.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sgdsde/errors.hpp"
#include "sgdsde/linalg.hpp"

namespace sgdsde {

// --- Objective base ----------------------------------------------------------

Vector Objective::hessian_vec(const Vector& x, const Vector& v) const {
  return hessian(x) * v;
}

// --- QuadraticObjective ------------------------------------------------------

QuadraticObjective::QuadraticObjective(Matrix A) : A_(std::move(A)) {
  if (A_.rows() != A_.cols()) {
    throw WrongShape("QuadraticObjective: matrix must be square");
  }
  const double asym = max_abs(Matrix(A_ - A_.transpose()));
  if (asym > 1e-12 * std::max(1.0, max_abs(A_))) {
    throw NonSymmetric("QuadraticObjective: matrix must be symmetric");
  }
}

double QuadraticObjective::value(const Vector& x) const {
  return 0.5 * x.dot(A_ * x);
}

Vector QuadraticObjective::gradient(const Vector& x) const { return A_ * x; }

Matrix QuadraticObjective::hessian(const Vector&) const { return A_; }

Vector QuadraticObjective::hessian_vec(const Vector&, const Vector& v) const {
  return A_ * v;
}

// --- BimodalPiecewise --------------------------------------------------------

double BimodalPiecewise::value(const Vector& x) const {
  const double t = x(0);
  if (t < 1.0) {
    return 0.5 * t * t;
  }
  if (t < 3.0) {
    return -0.5 * (t - 2.0) * (t - 2.0) + 1.0;
  }
  return 0.25 * (t - 5.0) * (t - 5.0) - 0.5;
}

Vector BimodalPiecewise::gradient(const Vector& x) const {
  const double t = x(0);
  Vector g(1);
  if (t < 1.0) {
    g(0) = t;
  } else if (t < 3.0) {
    g(0) = -(t - 2.0);
  } else {
    g(0) = 0.5 * (t - 5.0);
  }
  return g;
}

Matrix BimodalPiecewise::hessian(const Vector& x) const {
  const double t = x(0);
  Matrix h(1, 1);
  // At the joins the curvature is taken from the left piece (x = 1 belongs
  // to the first, x = 3 to the second); trajectories hit the joins with
  // probability zero, so the choice only pins down a convention.
  if (t <= 1.0) {
    h(0, 0) = 1.0;
  } else if (t <= 3.0) {
    h(0, 0) = -1.0;
  } else {
    h(0, 0) = 0.5;
  }
  return h;
}

// --- load_iris ----------------------------------------------------------------

namespace {

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) {
    return "";
  }
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    out.push_back(strip(field));
  }
  if (!line.empty() && line.back() == ',') {
    out.push_back("");
  }
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) {
    return false;
  }
  std::size_t pos = 0;
  try {
    out = std::stod(s, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == s.size();
}

}  // namespace

Dataset load_iris(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("load_iris: cannot open '" + path + "'");
  }

  std::vector<std::array<double, 4>> rows;
  std::vector<int> labels;
  std::string line;
  int lineno = 0;
  bool any_content = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string trimmed = strip(line);
    if (trimmed.empty()) {
      continue;
    }
    const std::vector<std::string> fields = split_csv_line(trimmed);
    double probe;
    if (!any_content && !fields.empty() && !parse_double(fields[0], probe)) {
      // Optional header row.
      any_content = true;
      continue;
    }
    any_content = true;
    if (fields.size() != 5) {
      std::ostringstream msg;
      msg << "load_iris: row " << lineno << " has " << fields.size()
          << " fields, expected 4 features + 1 label";
      throw WrongShape(msg.str());
    }
    std::array<double, 4> feat;
    for (int c = 0; c < 4; ++c) {
      if (!parse_double(fields[c], feat[c])) {
        std::ostringstream msg;
        msg << "load_iris: row " << lineno << ", column " << (c + 1)
            << ": '" << fields[c] << "' is not numeric";
        throw ParseError(msg.str());
      }
    }
    const std::string label = lowercase(fields[4]);
    int id;
    if (label == "setosa" || label == "iris-setosa") {
      id = 0;
    } else if (label == "versicolor" || label == "iris-versicolor") {
      id = 1;
    } else if (label == "virginica" || label == "iris-virginica") {
      id = 2;
    } else {
      std::ostringstream msg;
      msg << "load_iris: row " << lineno << ": unknown label '" << fields[4]
          << "'";
      throw WrongShape(msg.str());
    }
    rows.push_back(feat);
    labels.push_back(id);
  }

  if (rows.empty()) {
    throw ParseError("load_iris: file contains no data rows");
  }
  if (rows.size() != 150) {
    std::ostringstream msg;
    msg << "load_iris: expected 150 samples, found " << rows.size();
    throw WrongShape(msg.str());
  }

  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(rows.size()), 4);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int c = 0; c < 4; ++c) {
      ds.features(static_cast<Eigen::Index>(r), c) = rows[r][c];
    }
  }
  ds.labels = std::move(labels);
  ds.n_classes = 3;
  for (int cls = 0; cls < 3; ++cls) {
    if (std::count(ds.labels.begin(), ds.labels.end(), cls) == 0) {
      throw WrongShape("load_iris: a class is missing from the file");
    }
  }

  // Column-wise z-score standardization (population standard deviation).
  const Eigen::Index n = ds.features.rows();
  for (int c = 0; c < 4; ++c) {
    const double mean = ds.features.col(c).mean();
    ds.features.col(c).array() -= mean;
    const double var = ds.features.col(c).squaredNorm() / static_cast<double>(n);
    const double sd = std::sqrt(var);
    if (sd > 0.0) {
      ds.features.col(c) /= sd;
    }
  }
  return ds;
}

// --- MlpClassifier -------------------------------------------------------------

namespace {

constexpr int kIn = 4;
constexpr int kHidden = 10;
constexpr int kOut = 3;

// Parameter layout (column-major within each block):
//   W1 (10x4), b1 (10), W2 (10x10), b2 (10), W3 (3x10), b3 (3)  -> 193 total.
struct MlpParams {
  Eigen::Map<const Matrix> W1, W2, W3;
  Eigen::Map<const Vector> b1, b2, b3;
  explicit MlpParams(const Vector& theta)
      : W1(theta.data(), kHidden, kIn),
        W2(theta.data() + kHidden * kIn + kHidden, kHidden, kHidden),
        W3(theta.data() + kHidden * kIn + kHidden + kHidden * kHidden + kHidden,
           kOut, kHidden),
        b1(theta.data() + kHidden * kIn, kHidden),
        b2(theta.data() + kHidden * kIn + kHidden + kHidden * kHidden, kHidden),
        b3(theta.data() + kHidden * kIn + kHidden + kHidden * kHidden + kHidden +
               kOut * kHidden,
           kOut) {}
};

Matrix sigmoid_cols(const Matrix& z) {
  return (1.0 + (-z.array()).exp()).inverse();
}

}  // namespace

MlpClassifier::MlpClassifier(Dataset data) : data_(std::move(data)) {
  if (data_.features.cols() != kIn) {
    throw WrongShape("MlpClassifier: dataset must have 4 feature columns");
  }
  if (data_.n_classes != kOut) {
    throw WrongShape("MlpClassifier: dataset must have 3 classes");
  }
  // The loss and its derivatives are evaluated many thousand times per
  // experiment, so stage the whole dataset column-wise once and let every
  // pass run as a handful of matrix products.
  features_t_ = data_.features.transpose();
  onehot_ = Matrix::Zero(kOut, features_t_.cols());
  for (Eigen::Index s = 0; s < features_t_.cols(); ++s) {
    onehot_(data_.labels[static_cast<std::size_t>(s)], s) = 1.0;
  }
}

double MlpClassifier::value(const Vector& theta) const {
  const MlpParams p(theta);
  const Eigen::Index n = features_t_.cols();
  const Matrix a1 =
      sigmoid_cols(Matrix((p.W1 * features_t_).colwise() + p.b1));
  const Matrix a2 = sigmoid_cols(Matrix((p.W2 * a1).colwise() + p.b2));
  const Matrix z3 = (p.W3 * a2).colwise() + p.b3;
  // Cross-entropy of the softmax output: logsumexp(z) - z[label], summed
  // over sample columns.
  const Eigen::RowVectorXd zmax = z3.colwise().maxCoeff();
  const Eigen::RowVectorXd lse =
      zmax.array() +
      (z3.rowwise() - zmax).array().exp().colwise().sum().log();
  const double picked = (z3.array() * onehot_.array()).sum();
  return (lse.sum() - picked) / static_cast<double>(n);
}

Vector MlpClassifier::gradient(const Vector& theta) const {
  const MlpParams p(theta);
  const Eigen::Index n = features_t_.cols();
  const Matrix a1 =
      sigmoid_cols(Matrix((p.W1 * features_t_).colwise() + p.b1));
  const Matrix a2 = sigmoid_cols(Matrix((p.W2 * a1).colwise() + p.b2));
  const Matrix z3 = (p.W3 * a2).colwise() + p.b3;
  const Eigen::RowVectorXd zmax = z3.colwise().maxCoeff();
  Matrix dz3 = (z3.rowwise() - zmax).array().exp();
  dz3.array().rowwise() /= dz3.colwise().sum().array();
  dz3 -= onehot_;
  const Matrix dz2 =
      ((p.W3.transpose() * dz3).array() * (a2.array() * (1.0 - a2.array())))
          .matrix();
  const Matrix dz1 =
      ((p.W2.transpose() * dz2).array() * (a1.array() * (1.0 - a1.array())))
          .matrix();

  Vector g(dim());
  Eigen::Index off = 0;
  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::Map<Matrix>(g.data() + off, kHidden, kIn) =
      (dz1 * features_t_.transpose()) * inv_n;
  off += kHidden * kIn;
  Eigen::Map<Vector>(g.data() + off, kHidden) = dz1.rowwise().sum() * inv_n;
  off += kHidden;
  Eigen::Map<Matrix>(g.data() + off, kHidden, kHidden) =
      (dz2 * a1.transpose()) * inv_n;
  off += kHidden * kHidden;
  Eigen::Map<Vector>(g.data() + off, kHidden) = dz2.rowwise().sum() * inv_n;
  off += kHidden;
  Eigen::Map<Matrix>(g.data() + off, kOut, kHidden) =
      (dz3 * a2.transpose()) * inv_n;
  off += kOut * kHidden;
  Eigen::Map<Vector>(g.data() + off, kOut) = dz3.rowwise().sum() * inv_n;
  return g;
}

Matrix MlpClassifier::hessian(const Vector& theta) const {
  // One-sided differences halve the gradient count of the central scheme;
  // with a ~1e-6 step the truncation error sits far below anything the
  // weak-error experiments resolve, and this function dominates their cost.
  const Vector g0 = gradient(theta);
  Matrix H(dim(), dim());
  Vector xp = theta;
  for (Eigen::Index i = 0; i < dim(); ++i) {
    const double step = 1e-6 * (1.0 + std::abs(theta(i)));
    xp(i) = theta(i) + step;
    H.col(i) = (gradient(xp) - g0) / step;
    xp(i) = theta(i);
  }
  return Matrix((H + H.transpose()) / 2.0);
}

Vector MlpClassifier::hessian_vec(const Vector& theta, const Vector& v) const {
  const double vnorm = v.norm();
  if (vnorm == 0.0) {
    return Vector::Zero(dim());
  }
  const Vector u = v / vnorm;
  const double eps = 1e-4;
  const Vector gp = gradient(theta + eps * u);
  const Vector gm = gradient(theta - eps * u);
  return (vnorm / (2.0 * eps)) * (gp - gm);
}

Vector MlpClassifier::initial_point(std::uint64_t seed) const {
  CounterRng rng(seed, 0);
  Vector theta(dim());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    theta(i) = rng.uniform() - 0.5;
  }
  return theta;
}

// --- hessian_fd ----------------------------------------------------------------

Matrix hessian_fd(const Objective& obj, const Vector& x, double h) {
  if (h <= 0.0) {
    throw DomainError("hessian_fd: step must be positive");
  }
  const int d = obj.dim();
  Matrix H(d, d);
  Vector xp = x, xm = x;
  for (int j = 0; j < d; ++j) {
    const double hj = std::max(h, h * std::abs(x(j)));
    xp(j) = x(j) + hj;
    xm(j) = x(j) - hj;
    H.col(j) = (obj.gradient(xp) - obj.gradient(xm)) / (2.0 * hj);
    xp(j) = x(j);
    xm(j) = x(j);
  }
  return ((H + H.transpose()) / 2.0).eval();
}

// --- noise models ----------------------------------------------------------------

namespace {

class IsotropicNoise final : public NoiseModel {
 public:
  IsotropicNoise(int dim, double sigma2) : dim_(dim), sigma2_(sigma2) {}
  int dim() const override { return dim_; }
  Matrix covariance(const Vector&) const override {
    return sigma2_ * Matrix::Identity(dim_, dim_);
  }
  Vector sample(const Vector&, CounterRng& rng) const override {
    Vector xi(dim_);
    const double sd = std::sqrt(sigma2_);
    for (int i = 0; i < dim_; ++i) {
      xi(i) = sd * rng.normal();
    }
    return xi;
  }
  bool constant() const override { return true; }

 private:
  int dim_;
  double sigma2_;
};

class ConstantNoise final : public NoiseModel {
 public:
  explicit ConstantNoise(Matrix Sigma)
      : Sigma_(std::move(Sigma)), root_(psd_sqrt(Sigma_)) {}
  int dim() const override { return static_cast<int>(Sigma_.rows()); }
  Matrix covariance(const Vector&) const override { return Sigma_; }
  Vector sample(const Vector&, CounterRng& rng) const override {
    Vector z(Sigma_.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      z(i) = rng.normal();
    }
    return root_ * z;
  }
  bool constant() const override { return true; }

 private:
  Matrix Sigma_;
  Matrix root_;
};

}  // namespace

NoiseModelPtr make_isotropic_noise(int dim, double sigma2) {
  if (sigma2 < 0.0) {
    throw NegativeVariance("make_isotropic_noise: sigma2 must be >= 0");
  }
  if (dim <= 0) {
    throw WrongShape("make_isotropic_noise: dimension must be positive");
  }
  return std::make_shared<IsotropicNoise>(dim, sigma2);
}

NoiseModelPtr make_constant_noise(const Matrix& Sigma) {
  return std::make_shared<ConstantNoise>(Sigma);
}

}  // namespace sgdsde
