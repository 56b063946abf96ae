#pragma once

#include "llweak/linalg.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace llweak {

using linalg::Matrix;
using linalg::Vector;

/// Mean and covariance of a d-dimensional random vector.
struct Moments {
  Vector mean;
  Matrix variance;

  Matrix second_moment() const { return variance + mean * mean.transpose(); }
  static Moments from_second_moment(Vector mean, const Matrix& second);
};

/// Coefficient g^k(t, x) -> R^d.
using CoefficientFn = std::function<Vector(double t, const Vector& x)>;
/// Spatial Jacobian dg^k/dx (t, x) -> R^{d x d}.
using JacobianFn = std::function<Matrix(double t, const Vector& x)>;
/// Time derivative dg^k/dt (t, x) -> R^d.
using TimeDerivativeFn = std::function<Vector(double t, const Vector& x)>;

/// An Ito SDE  dX = f(t,X) dt + sum_k g^k(t,X) dW^k  on [t0, t_end].
///
/// Coefficient arrays are indexed k = 0..m with index 0 holding the drift f,
/// matching the convention W^0_s = s. Jacobian arrays are either empty or
/// m+1 long; a null entry falls back to central finite differences.
struct SdeProblem {
  std::string name;
  int dim = 0;
  int noise_dim = 0;
  double t0 = 0.0;
  double t_end = 1.0;
  Vector x0;

  std::vector<CoefficientFn> coefficients;
  std::vector<JacobianFn> jacobian_x;
  std::vector<TimeDerivativeFn> jacobian_t;

  std::function<Moments(double t)> exact_moments;
  /// Closed form of E|X_t|^2 when known.
  std::function<double(double t)> exact_functional;
  /// Exact path sampler: state at t given the Wiener values W^1..W^m at t.
  std::function<Vector(double t, const Vector& wiener)> exact_sample;

  /// Throws std::invalid_argument if the dimensions or bounds are inconsistent.
  void validate() const;

  Vector drift(double t, const Vector& x) const { return coefficients[0](t, x); }
  Vector diffusion(int k, double t, const Vector& x) const { return coefficients[k](t, x); }
  Vector coefficient(int k, double t, const Vector& x) const { return coefficients[k](t, x); }
};

/// First-order Taylor data of every coefficient at an anchor (tau, z):
/// g^k(s, x) ~ B[k] x + b0[k] + b1[k] (s - tau).
struct LinearizationData {
  std::vector<Matrix> B;
  std::vector<Vector> b0;
  std::vector<Vector> b1;
  double tau = 0.0;
  Vector z;

  int dim() const { return static_cast<int>(z.size()); }
  int noise_dim() const { return static_cast<int>(B.size()) - 1; }
  /// Affine part b^k(s) = b0[k] + b1[k] (s - tau).
  Vector b(int k, double s) const { return b0[k] + b1[k] * (s - tau); }
};

/// Linearizes every coefficient of p around (tau, z). Throws
/// std::domain_error on non-finite coefficient or derivative values.
LinearizationData linearize(const SdeProblem& p, double tau, const Vector& z);

/// Central-difference spatial Jacobian of g^k.
Matrix finite_difference_jacobian(const SdeProblem& p, int k, double t, const Vector& x);
/// Central-difference time derivative of g^k.
Vector finite_difference_time_derivative(const SdeProblem& p, int k, double t, const Vector& x);

/// True when the linearization of p does not depend on the anchor state,
/// i.e. the SDE is linear in x. Decided by probing a fixed set of states at
/// a few times in [t0, t_end].
bool has_state_independent_linearization(const SdeProblem& p);

}  // namespace llweak
