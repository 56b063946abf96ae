#pragma once

#include "llweak/linalg.hpp"

#include <cmath>

// Reference implementations used only to check the library.
namespace llweak::test {

using linalg::Index;
using linalg::Matrix;

// exp(A) as (sum_{j<60} (A/2^s)^j / j!)^(2^s) with ||A/2^s|| < 0.5 and
// Kahan-compensated accumulation of the series.
inline Matrix taylor_expm(const Matrix& a) {
  int s = 0;
  double norm = a.norm();
  while (norm >= 0.5) {
    norm *= 0.5;
    ++s;
  }
  const Matrix x = a / std::ldexp(1.0, s);
  const Index n = a.rows();
  Matrix sum = Matrix::Identity(n, n);
  Matrix carry = Matrix::Zero(n, n);
  Matrix term = Matrix::Identity(n, n);
  for (int j = 1; j < 60; ++j) {
    term = term * x / static_cast<double>(j);
    const Matrix y = term - carry;
    const Matrix t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  for (int i = 0; i < s; ++i) sum = sum * sum;
  return sum;
}


// Regularized incomplete beta I_x(a, b) by the modified Lentz continued
// fraction, using the symmetry relation where the fraction converges slowly.
inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - incomplete_beta(b, a, 1.0 - x);
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  constexpr double tiny = 1e-300;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double f = d;
  for (int m = 1; m < 10000; ++m) {
    const double m2 = 2.0 * m;
    double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    f *= d * c;
    num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(log_front) * f / a;
}

inline double oracle_t_cdf(double t, double df) {
  const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
  return t >= 0.0 ? 1.0 - tail : tail;
}

inline double oracle_t_quantile(double p, double df) {
  double lo = 0.0, hi = 64.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (oracle_t_cdf(mid, df) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace llweak::test
