#include "sgdsde/coefficients.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "sgdsde/errors.hpp"

namespace sgdsde {

Rational c_coeff(int s) {
  if (s < 0) {
    throw DomainError("c_coeff: index must be >= 0");
  }
  return Rational(-1, s + 1);
}

// --- Series2D -----------------------------------------------------------------

Series2D::Series2D(int order, std::vector<Rational> exact)
    : order_(order), exact_(std::move(exact)) {
  if (static_cast<int>(exact_.size()) != (order_ + 1) * (order_ + 1)) {
    throw WrongShape("Series2D: storage size does not match order");
  }
}

Series2D::Series2D(int order, std::vector<BigFloat> wide)
    : order_(order), wide_(std::move(wide)) {
  if (static_cast<int>(wide_.size()) != (order_ + 1) * (order_ + 1)) {
    throw WrongShape("Series2D: storage size does not match order");
  }
}

int Series2D::idx(int s, int m) const {
  if (s < 0 || m < 0 || s > order_ || m > order_) {
    std::ostringstream msg;
    msg << "Series2D: index (" << s << "," << m << ") outside order " << order_;
    throw DomainError(msg.str());
  }
  return s * (order_ + 1) + m;
}

const Rational& Series2D::exact_at(int s, int m) const {
  if (!is_exact()) {
    throw DomainError("Series2D: table is stored in floating point");
  }
  return exact_[static_cast<std::size_t>(idx(s, m))];
}

BigFloat Series2D::wide_at(int s, int m) const {
  const int i = idx(s, m);
  if (is_exact()) {
    return static_cast<BigFloat>(exact_[static_cast<std::size_t>(i)]);
  }
  return wide_[static_cast<std::size_t>(i)];
}

double Series2D::at(int s, int m) const {
  return static_cast<double>(wide_at(s, m));
}

// --- a-table -------------------------------------------------------------------

namespace {

// Division route. Writing a(x,y) (xy - x - y) = log((1-x)(1-y)) and matching
// coefficients gives
//   boundary:  a_{0,m} = 1/(m+1)                      (from x^0 y^{m+1})
//   interior:  a_{s+1,m} = a_{s,m} - a_{s,m+1}        (from x^{s+2} y^{m+1})
// and leaves the x-side boundary equations a_{s,0} = 1/(s+1) over-determined;
// they are the built-in consistency check of the division.
template <typename T>
std::vector<T> a_table_division(int P, T* max_residual) {
  const int wide_cols = 2 * P + 1;  // row s is valid up to column 2P - s
  std::vector<T> row(static_cast<std::size_t>(wide_cols));
  for (int m = 0; m < wide_cols; ++m) {
    row[static_cast<std::size_t>(m)] = T(1) / T(m + 1);
  }
  std::vector<T> table(static_cast<std::size_t>((P + 1) * (P + 1)));
  for (int m = 0; m <= P; ++m) {
    table[static_cast<std::size_t>(m)] = row[static_cast<std::size_t>(m)];
  }
  *max_residual = T(0);
  for (int s = 1; s <= P; ++s) {
    for (int m = 0; m <= 2 * P - s; ++m) {
      row[static_cast<std::size_t>(m)] = row[static_cast<std::size_t>(m)] -
                                         row[static_cast<std::size_t>(m + 1)];
    }
    for (int m = 0; m <= P; ++m) {
      table[static_cast<std::size_t>(s * (P + 1) + m)] =
          row[static_cast<std::size_t>(m)];
    }
    // Over-determined boundary equation at (s, 0).
    T residual = row[0] - T(1) / T(s + 1);
    if (residual < T(0)) {
      residual = -residual;
    }
    if (residual > *max_residual) {
      *max_residual = residual;
    }
  }
  return table;
}

// Coefficients of c(x)^n truncated at order P, with c_k = -1/(k+1);
// rho[n][m] is the coefficient of x^m in c(x)^n and rho[0][m] = [m == 0].
template <typename T>
std::vector<std::vector<T>> rho_table(int n_max, int P) {
  std::vector<T> c(static_cast<std::size_t>(P + 1));
  for (int k = 0; k <= P; ++k) {
    c[static_cast<std::size_t>(k)] = T(-1) / T(k + 1);
  }
  std::vector<std::vector<T>> rho(static_cast<std::size_t>(n_max + 1),
                                  std::vector<T>(static_cast<std::size_t>(P + 1),
                                                 T(0)));
  rho[0][0] = T(1);
  for (int n = 1; n <= n_max; ++n) {
    for (int m = 0; m <= P; ++m) {
      T acc(0);
      for (int j = 0; j <= m; ++j) {
        acc += c[static_cast<std::size_t>(j)] *
               rho[static_cast<std::size_t>(n - 1)][static_cast<std::size_t>(m - j)];
      }
      rho[static_cast<std::size_t>(n)][static_cast<std::size_t>(m)] = acc;
    }
  }
  return rho;
}

template <typename T>
std::vector<std::vector<T>> binomial_table(int n_max) {
  std::vector<std::vector<T>> C(static_cast<std::size_t>(n_max + 1));
  for (int n = 0; n <= n_max; ++n) {
    C[static_cast<std::size_t>(n)].assign(static_cast<std::size_t>(n + 1), T(1));
    for (int k = 1; k < n; ++k) {
      C[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)] =
          C[static_cast<std::size_t>(n - 1)][static_cast<std::size_t>(k - 1)] +
          C[static_cast<std::size_t>(n - 1)][static_cast<std::size_t>(k)];
    }
  }
  return C;
}

// Independent recursion route for the a-table (checked against the division
// route up to total order `depth`):
//   a_{0,0} = 1,
//   a_{s,m} = -sum_{n=2}^{s+m+1} (1/n!) sum_{l<=s} sum_{r<=m} a_{l,r}
//             sum_{q=0}^{n-1} C(n-1,q) rho(q, s-q-l) rho(n-1-q, m+1-n+q-r).
template <typename T>
std::vector<std::vector<T>> a_table_recursion(int depth) {
  const int n_max = 2 * depth + 1;
  const auto rho = rho_table<T>(n_max, depth + 1);
  const auto C = binomial_table<T>(n_max);
  std::vector<T> inv_factorial(static_cast<std::size_t>(n_max + 1), T(1));
  for (int n = 1; n <= n_max; ++n) {
    inv_factorial[static_cast<std::size_t>(n)] =
        inv_factorial[static_cast<std::size_t>(n - 1)] / T(n);
  }
  auto rho_at = [&](int n, int m) -> T {
    if (m < 0 || n < 0) {
      return T(0);
    }
    return rho[static_cast<std::size_t>(n)][static_cast<std::size_t>(m)];
  };

  std::vector<std::vector<T>> a(static_cast<std::size_t>(depth + 1),
                                std::vector<T>(static_cast<std::size_t>(depth + 1),
                                               T(0)));
  a[0][0] = T(1);
  for (int total = 1; total <= depth; ++total) {
    for (int s = 0; s <= total; ++s) {
      const int m = total - s;
      T sum(0);
      for (int n = 2; n <= s + m + 1; ++n) {
        T inner(0);
        for (int l = 0; l <= s; ++l) {
          for (int r = 0; r <= m; ++r) {
            if (l + r >= total) {
              continue;  // only lower-order entries feed the recursion
            }
            T qsum(0);
            for (int q = 0; q <= n - 1; ++q) {
              const T r1 = rho_at(q, s - q - l);
              const T r2 = rho_at(n - 1 - q, m + 1 - n + q - r);
              if (r1 != T(0) && r2 != T(0)) {
                qsum += C[static_cast<std::size_t>(n - 1)]
                         [static_cast<std::size_t>(q)] *
                        r1 * r2;
              }
            }
            if (qsum != T(0)) {
              inner += a[static_cast<std::size_t>(l)][static_cast<std::size_t>(r)] *
                       qsum;
            }
          }
        }
        sum += inv_factorial[static_cast<std::size_t>(n)] * inner;
      }
      a[static_cast<std::size_t>(s)][static_cast<std::size_t>(m)] = -sum;
    }
  }
  return a;
}

template <typename T>
T abs_value(const T& v) {
  return v < T(0) ? T(-v) : v;
}

// Residual tolerance: exact arithmetic demands exact agreement; wide floats
// get the 1e-20 budget.
inline bool exceeds_tol(const Rational& v) { return v != 0; }
inline bool exceeds_tol(const BigFloat& v) {
  static const BigFloat tol("1e-20");
  return v > tol;
}

// Division route + both verifications, in either exact or wide arithmetic.
template <typename T>
std::vector<T> a_table_checked(int P) {
  T division_residual(0);
  std::vector<T> table = a_table_division<T>(P, &division_residual);
  if (exceeds_tol(division_residual)) {
    std::ostringstream msg;
    msg << "a_coeff_table: series-division residual exceeds 1e-20 at order "
        << P;
    throw PrecisionLoss(msg.str());
  }
  // Cross-check the independent recursion on the low-order block. Depth 8
  // keeps the multinomial sums cheap while covering every entry the
  // acceptance-sensitive consumers read most often.
  const int depth = P < 8 ? P : 8;
  const auto rec = a_table_recursion<T>(depth);
  for (int s = 0; s <= depth; ++s) {
    for (int m = 0; m + s <= depth; ++m) {
      const T diff = abs_value<T>(
          table[static_cast<std::size_t>(s * (P + 1) + m)] -
          rec[static_cast<std::size_t>(s)][static_cast<std::size_t>(m)]);
      if (exceeds_tol(diff)) {
        std::ostringstream msg;
        msg << "a_coeff_table: division and recursion routes disagree at ("
            << s << "," << m << ")";
        throw PrecisionLoss(msg.str());
      }
    }
  }
  return table;
}

}  // namespace

Series2D a_coeff_table(int P) {
  if (P < 0 || P > 40) {
    throw DomainError("a_coeff_table: order must be in [0, 40]");
  }
  if (P <= 20) {
    return Series2D(P, a_table_checked<Rational>(P));
  }
  return Series2D(P, a_table_checked<BigFloat>(P));
}

// --- b-table -------------------------------------------------------------------

Series2D b_coeff_table(int P) {
  if (P < 0 || P > 20) {
    throw DomainError("b_coeff_table: order must be in [0, 20]");
  }
  const int n_max = 2 * P + 2;
  const auto rho = rho_table<Rational>(n_max, P + 1);
  const auto C = binomial_table<Rational>(n_max);
  std::vector<Rational> inv_factorial(static_cast<std::size_t>(n_max + 1),
                                      Rational(1));
  for (int n = 1; n <= n_max; ++n) {
    inv_factorial[static_cast<std::size_t>(n)] =
        inv_factorial[static_cast<std::size_t>(n - 1)] / Rational(n);
  }
  auto rho_at = [&](int n, int m) -> Rational {
    if (m < 0 || n < 0) {
      return Rational(0);
    }
    return rho[static_cast<std::size_t>(n)][static_cast<std::size_t>(m)];
  };

  // b_{s,m} = sum_{n=2}^{s+m+2} (1/n!) sum_{i=2}^{n} sum_{q=0}^{n-i}
  //           C(n-i,q) rho(q+1, m-q) rho(n-1-q, s+q-n+2).
  std::vector<Rational> table(static_cast<std::size_t>((P + 1) * (P + 1)));
  for (int s = 0; s <= P; ++s) {
    for (int m = 0; m <= P; ++m) {
      Rational total(0);
      for (int n = 2; n <= s + m + 2; ++n) {
        Rational inner(0);
        for (int i = 2; i <= n; ++i) {
          for (int q = 0; q <= n - i; ++q) {
            const Rational r1 = rho_at(q + 1, m - q);
            const Rational r2 = rho_at(n - 1 - q, s + q - n + 2);
            if (r1 != 0 && r2 != 0) {
              inner += C[static_cast<std::size_t>(n - i)]
                        [static_cast<std::size_t>(q)] *
                       r1 * r2;
            }
          }
        }
        total += inv_factorial[static_cast<std::size_t>(n)] * inner;
      }
      table[static_cast<std::size_t>(s * (P + 1) + m)] = total;
    }
  }
  return Series2D(P, std::move(table));
}

// --- truncated series evaluation -------------------------------------------------

Vector truncated_drift(const Objective& obj, const Vector& x, double eta,
                       int P) {
  if (eta <= 0.0) {
    throw DomainError("truncated_drift: eta must be positive");
  }
  const Matrix H = obj.hessian(x);
  Vector hp_grad = obj.gradient(x);  // H^p grad f, starting at p = 0
  Vector result = Vector::Zero(x.size());
  double eta_pow = 1.0;
  for (int p = 0; p <= P; ++p) {
    const double cp = -1.0 / static_cast<double>(p + 1);
    result += eta_pow * cp * hp_grad;
    if (p < P) {
      hp_grad = H * hp_grad;
      eta_pow *= eta;
    }
  }
  return result;
}

Matrix truncated_diffusion_sq(const Objective& obj, const NoiseModel& noise,
                              const Vector& x, double eta, int P) {
  if (eta <= 0.0) {
    throw DomainError("truncated_diffusion_sq: eta must be positive");
  }
  if (P < 1) {
    return Matrix::Zero(x.size(), x.size());
  }
  const Matrix H = obj.hessian(x);
  const Matrix Sigma = noise.covariance(x);
  const Series2D a = a_coeff_table(P - 1);

  // sum over p of eta^p h_p with h_p = sum_k a_{k,p-1-k} H^k Sigma H^{p-1-k};
  // reorganized as sum over (k, j = p-1-k) so each H power is applied once.
  Matrix result = Matrix::Zero(x.size(), x.size());
  Matrix hk_sigma = Sigma;  // H^k Sigma
  for (int k = 0; k <= P - 1; ++k) {
    Matrix term = hk_sigma;  // H^k Sigma H^j, starting at j = 0
    double eta_pow = std::pow(eta, k + 1);
    for (int j = 0; j + k <= P - 1; ++j) {
      result += eta_pow * a.at(k, j) * term;
      if (j + k < P - 1) {
        term = term * H;
        eta_pow *= eta;
      }
    }
    if (k < P - 1) {
      hk_sigma = H * hk_sigma;
    }
  }
  return ((result + result.transpose()) / 2.0).eval();
}

}  // namespace sgdsde
