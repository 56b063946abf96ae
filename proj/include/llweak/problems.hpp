#pragma once

#include "llweak/sde_model.hpp"

#include <string>
#include <string_view>
#include <vector>

/// Benchmark problems with closed-form ground truth.
namespace llweak::problems {

/// Bilinear SDE with random oscillatory dynamics:
///   dX = alpha J X dt + rho1 J X dW^1 + rho2 X dW^2,  J = [[0, 1], [-1, 0]].
struct Example1Spec {
  double alpha = 10.0;
  double rho1 = 0.1;
  double rho2 = 0.2;
  Vector x0 = (Vector(2) << 1.0, 2.0).finished();
  double t_end = 12.5625;
};

/// Nonautonomous nonlinear test equation
///   dX = (-X2, X1) dt + (0, sin(X1+X2)/sqrt(1+t)) dW^1
///                     + (cos(X1+X2)/sqrt(1+t), 0) dW^2
/// with E|X_t|^2 = |X_0|^2 + log(1 + t).
struct Example2Spec {
  Vector x0 = (Vector(2) << 1.0, 1.0).finished();
  double t_end = 10.0;
};

/// Scalar linear SDE dX = a X dt + b X dW.
struct ScalarLinearSpec {
  double a = 0.5;
  double b = 0.3;
  double x0 = 1.0;
  double t_end = 1.0;
};

/// Exact state at t given the Wiener values (w1, w2) at t.
Vector example1_exact_sample(const Example1Spec& spec, double w1, double w2, double t);

/// Mean and variance of Example 1 at t from the 8x8 augmented exponential.
Moments example1_exact_moments(const Example1Spec& spec, double t);

/// E|X_t|^2 for Example 2.
double example2_exact_functional(const Example2Spec& spec, double t);

SdeProblem make_example1(const Example1Spec& spec = {});
SdeProblem make_example2(const Example2Spec& spec = {});
SdeProblem make_scalar_linear(const ScalarLinearSpec& spec, std::string name);

/// Registry lookup: "example1", "example2", "gbm", "scalar-stability".
/// Throws std::invalid_argument for unknown names.
SdeProblem make_problem(std::string_view name);
const std::vector<std::string>& problem_names();

}  // namespace llweak::problems
