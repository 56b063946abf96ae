#pragma once

#include "llweak/linalg.hpp"
#include "llweak/sde_model.hpp"

#include <cmath>
#include <random>

namespace llweak::test {

using linalg::Matrix;
using linalg::Vector;

inline Matrix random_matrix(std::mt19937_64& gen, int rows, int cols, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = u(gen);
  return m;
}

inline Vector random_vector(std::mt19937_64& gen, int n, double lo = -1.0, double hi = 1.0) {
  return random_matrix(gen, n, 1, lo, hi);
}

inline double rel_error(const Matrix& got, const Matrix& want) {
  const double scale = want.norm();
  return (got - want).norm() / (scale > 0.0 ? scale : 1.0);
}

inline Matrix random_orthogonal(std::mt19937_64& gen, int n) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(gen, n, n));
  return qr.householderQ();
}

// Linear SDE dX = (B0 X + b00 + b01 t) dt + sum_k (Bk X + bk0 + bk1 t) dW^k with
// entries uniform in [-1, 1].
inline SdeProblem random_linear_problem(std::mt19937_64& gen, int d, int m) {
  SdeProblem p;
  p.name = "random-linear";
  p.dim = d;
  p.noise_dim = m;
  p.t0 = 0.0;
  p.t_end = 1.0;
  p.x0 = random_vector(gen, d);
  for (int k = 0; k <= m; ++k) {
    const Matrix b = random_matrix(gen, d, d);
    const Vector c0 = random_vector(gen, d);
    const Vector c1 = random_vector(gen, d);
    p.coefficients.push_back([=](double t, const Vector& x) -> Vector { return b * x + c0 + c1 * t; });
    p.jacobian_x.push_back([=](double, const Vector&) -> Matrix { return b; });
    p.jacobian_t.push_back([=](double, const Vector&) -> Vector { return c1; });
  }
  return p;
}

}  // namespace llweak::test
