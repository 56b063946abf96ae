#include "llweak/problems.hpp"

#include <cmath>
#include <stdexcept>

namespace llweak::problems {

namespace {

Matrix rotation_generator() { return (Matrix(2, 2) << 0.0, 1.0, -1.0, 0.0).finished(); }

}  // namespace

Vector example1_exact_sample(const Example1Spec& spec, double w1, double w2, double t) {
  const double growth = 0.5 * (spec.rho1 * spec.rho1 - spec.rho2 * spec.rho2) * t + spec.rho2 * w2;
  const double angle = spec.alpha * t + spec.rho1 * w1;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double scale = std::exp(growth);
  const Vector& x = spec.x0;
  return (Vector(2) << scale * (c * x[0] + s * x[1]), scale * (-s * x[0] + c * x[1])).finished();
}

Moments example1_exact_moments(const Example1Spec& spec, double t) {
  if (t < 0.0) throw std::invalid_argument("example1_exact_moments: negative time");
  const double a = spec.alpha;
  const double r1 = spec.rho1 * spec.rho1;
  const double r2 = spec.rho2 * spec.rho2;
  const Vector& x0 = spec.x0;

  Matrix h = Matrix::Zero(8, 8);
  h.topLeftCorner(4, 4) << r2, a, a, r1,
                           -a, r2, -r1, a,
                           -a, -r1, r2, a,
                           r1, -a, -a, r2;
  h.bottomRightCorner(3, 3) << 0.0, a, a * x0[1],
                               -a, 0.0, -a * x0[0],
                               0.0, 0.0, 0.0;

  Vector u0 = Vector::Zero(8);
  u0.head(4) = linalg::vec(x0 * x0.transpose());
  u0[4] = 1.0;
  u0[7] = 1.0;

  const Vector w = linalg::expm(h * t) * u0;
  Vector mean = x0 + w.segment(5, 2);
  Matrix variance = linalg::unvec(w.head(4), 2) - mean * mean.transpose();
  return Moments{std::move(mean), linalg::symmetrized(variance)};
}

double example2_exact_functional(const Example2Spec& spec, double t) {
  if (t <= -1.0) throw std::invalid_argument("example2_exact_functional: requires t > -1");
  return spec.x0.squaredNorm() + std::log1p(t);
}

SdeProblem make_example1(const Example1Spec& spec) {
  const Matrix j = rotation_generator();
  const Matrix b0 = spec.alpha * j;
  const Matrix b1 = spec.rho1 * j;
  const Matrix b2 = spec.rho2 * Matrix::Identity(2, 2);

  SdeProblem p;
  p.name = "example1";
  p.dim = 2;
  p.noise_dim = 2;
  p.t0 = 0.0;
  p.t_end = spec.t_end;
  p.x0 = spec.x0;
  for (const Matrix& b : {b0, b1, b2}) {
    p.coefficients.emplace_back([b](double, const Vector& x) -> Vector { return b * x; });
    p.jacobian_x.emplace_back([b](double, const Vector&) -> Matrix { return b; });
    p.jacobian_t.emplace_back([](double, const Vector&) -> Vector { return Vector::Zero(2); });
  }
  p.exact_moments = [spec](double t) { return example1_exact_moments(spec, t); };
  p.exact_functional = [spec](double t) {
    return spec.x0.squaredNorm() *
           std::exp((spec.rho1 * spec.rho1 + spec.rho2 * spec.rho2) * t);
  };
  p.exact_sample = [spec](double t, const Vector& w) {
    return example1_exact_sample(spec, w[0], w[1], t);
  };
  return p;
}

SdeProblem make_example2(const Example2Spec& spec) {
  SdeProblem p;
  p.name = "example2";
  p.dim = 2;
  p.noise_dim = 2;
  p.t0 = 0.0;
  p.t_end = spec.t_end;
  p.x0 = spec.x0;

  p.coefficients = {
      [](double, const Vector& x) -> Vector { return (Vector(2) << -x[1], x[0]).finished(); },
      [](double t, const Vector& x) -> Vector {
        return (Vector(2) << 0.0, std::sin(x[0] + x[1]) / std::sqrt(1.0 + t)).finished();
      },
      [](double t, const Vector& x) -> Vector {
        return (Vector(2) << std::cos(x[0] + x[1]) / std::sqrt(1.0 + t), 0.0).finished();
      },
  };
  p.jacobian_x = {
      [](double, const Vector&) -> Matrix {
        return (Matrix(2, 2) << 0.0, -1.0, 1.0, 0.0).finished();
      },
      [](double t, const Vector& x) -> Matrix {
        const double c = std::cos(x[0] + x[1]) / std::sqrt(1.0 + t);
        return (Matrix(2, 2) << 0.0, 0.0, c, c).finished();
      },
      [](double t, const Vector& x) -> Matrix {
        const double s = -std::sin(x[0] + x[1]) / std::sqrt(1.0 + t);
        return (Matrix(2, 2) << s, s, 0.0, 0.0).finished();
      },
  };
  p.jacobian_t = {
      [](double, const Vector&) -> Vector { return Vector::Zero(2); },
      [](double t, const Vector& x) -> Vector {
        return (Vector(2) << 0.0, -0.5 * std::sin(x[0] + x[1]) * std::pow(1.0 + t, -1.5))
            .finished();
      },
      [](double t, const Vector& x) -> Vector {
        return (Vector(2) << -0.5 * std::cos(x[0] + x[1]) * std::pow(1.0 + t, -1.5), 0.0)
            .finished();
      },
  };
  p.exact_functional = [spec](double t) { return example2_exact_functional(spec, t); };
  return p;
}

SdeProblem make_scalar_linear(const ScalarLinearSpec& spec, std::string name) {
  const double a = spec.a;
  const double b = spec.b;
  const double x0 = spec.x0;

  SdeProblem p;
  p.name = std::move(name);
  p.dim = 1;
  p.noise_dim = 1;
  p.t0 = 0.0;
  p.t_end = spec.t_end;
  p.x0 = Vector::Constant(1, x0);
  for (double c : {a, b}) {
    p.coefficients.emplace_back([c](double, const Vector& x) -> Vector { return c * x; });
    p.jacobian_x.emplace_back([c](double, const Vector&) -> Matrix { return Matrix::Constant(1, 1, c); });
    p.jacobian_t.emplace_back([](double, const Vector&) -> Vector { return Vector::Zero(1); });
  }
  p.exact_moments = [=](double t) {
    const Vector mean = Vector::Constant(1, x0 * std::exp(a * t));
    const Matrix second = Matrix::Constant(1, 1, x0 * x0 * std::exp((2.0 * a + b * b) * t));
    return Moments::from_second_moment(mean, second);
  };
  p.exact_functional = [=](double t) { return x0 * x0 * std::exp((2.0 * a + b * b) * t); };
  p.exact_sample = [=](double t, const Vector& w) -> Vector {
    return Vector::Constant(1, x0 * std::exp((a - 0.5 * b * b) * t + b * w[0]));
  };
  return p;
}

const std::vector<std::string>& problem_names() {
  static const std::vector<std::string> names{"example1", "example2", "gbm", "scalar-stability"};
  return names;
}

SdeProblem make_problem(std::string_view name) {
  if (name == "example1") return make_example1();
  if (name == "example2") return make_example2();
  if (name == "gbm") return make_scalar_linear(ScalarLinearSpec{}, "gbm");
  if (name == "scalar-stability") {
    return make_scalar_linear(ScalarLinearSpec{.a = -2.0, .b = 1.0, .x0 = 1.0, .t_end = 20.0},
                              "scalar-stability");
  }
  throw std::invalid_argument("unknown problem '" + std::string(name) + "'");
}

}  // namespace llweak::problems
