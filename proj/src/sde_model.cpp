#include "llweak/sde_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace llweak {

namespace {

double fd_step(double component) {
  static const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  return base * std::max(1.0, std::abs(component));
}

void require_finite(const Matrix& value, const char* what, int k, double t) {
  if (!linalg::all_finite(value)) {
    std::ostringstream os;
    os << "non-finite " << what << " for coefficient " << k << " at t=" << t;
    throw std::domain_error(os.str());
  }
}

bool close(const Matrix& a, const Matrix& b, double scale) {
  return (a - b).cwiseAbs().maxCoeff() <= 1e-7 * scale;
}

}  // namespace

Moments Moments::from_second_moment(Vector mean, const Matrix& second) {
  Matrix variance = linalg::symmetrized(second - mean * mean.transpose());
  return Moments{std::move(mean), std::move(variance)};
}

void SdeProblem::validate() const {
  if (dim < 1) throw std::invalid_argument("SdeProblem: dim must be >= 1");
  if (noise_dim < 1) throw std::invalid_argument("SdeProblem: noise_dim must be >= 1");
  if (!(t0 < t_end)) throw std::invalid_argument("SdeProblem: requires t0 < t_end");
  if (x0.size() != dim) throw std::invalid_argument("SdeProblem: x0 has wrong length");
  const auto terms = static_cast<std::size_t>(noise_dim) + 1;
  if (coefficients.size() != terms) {
    throw std::invalid_argument("SdeProblem: need drift plus one coefficient per noise");
  }
  for (const auto& c : coefficients) {
    if (!c) throw std::invalid_argument("SdeProblem: null coefficient function");
  }
  if (!jacobian_x.empty() && jacobian_x.size() != terms) {
    throw std::invalid_argument("SdeProblem: jacobian_x must be empty or m+1 long");
  }
  if (!jacobian_t.empty() && jacobian_t.size() != terms) {
    throw std::invalid_argument("SdeProblem: jacobian_t must be empty or m+1 long");
  }
}

Matrix finite_difference_jacobian(const SdeProblem& p, int k, double t, const Vector& x) {
  Matrix jac(p.dim, p.dim);
  Vector probe = x;
  for (int j = 0; j < p.dim; ++j) {
    const double h = fd_step(x[j]);
    probe[j] = x[j] + h;
    const Vector up = p.coefficient(k, t, probe);
    probe[j] = x[j] - h;
    const Vector down = p.coefficient(k, t, probe);
    probe[j] = x[j];
    jac.col(j) = (up - down) / (2.0 * h);
  }
  return jac;
}

Vector finite_difference_time_derivative(const SdeProblem& p, int k, double t, const Vector& x) {
  const double h = fd_step(t);
  return (p.coefficient(k, t + h, x) - p.coefficient(k, t - h, x)) / (2.0 * h);
}

LinearizationData linearize(const SdeProblem& p, double tau, const Vector& z) {
  const double slack = 1e-9 * std::max(1.0, std::abs(p.t_end - p.t0));
  if (tau < p.t0 - slack || tau > p.t_end + slack) {
    throw std::invalid_argument("linearize: anchor time outside [t0, t_end]");
  }
  if (z.size() != p.dim) throw std::invalid_argument("linearize: anchor has wrong length");
  if (!linalg::all_finite(z)) throw std::domain_error("linearize: anchor state is not finite");

  LinearizationData lin;
  lin.tau = tau;
  lin.z = z;
  const int terms = p.noise_dim + 1;
  lin.B.reserve(terms);
  lin.b0.reserve(terms);
  lin.b1.reserve(terms);
  for (int k = 0; k < terms; ++k) {
    const Vector g = p.coefficient(k, tau, z);
    require_finite(g, "coefficient value", k, tau);
    if (g.size() != p.dim) throw std::invalid_argument("linearize: coefficient has wrong length");

    Matrix jac = (!p.jacobian_x.empty() && p.jacobian_x[k]) ? p.jacobian_x[k](tau, z)
                                                            : finite_difference_jacobian(p, k, tau, z);
    require_finite(jac, "spatial Jacobian", k, tau);
    Vector dt = (!p.jacobian_t.empty() && p.jacobian_t[k])
                    ? p.jacobian_t[k](tau, z)
                    : finite_difference_time_derivative(p, k, tau, z);
    require_finite(dt, "time derivative", k, tau);

    lin.b0.push_back(g - jac * z);
    lin.b1.push_back(std::move(dt));
    lin.B.push_back(std::move(jac));
  }
  return lin;
}

bool has_state_independent_linearization(const SdeProblem& p) {
  p.validate();
  std::vector<Vector> probes;
  probes.push_back(p.x0);
  probes.push_back(Vector::Zero(p.dim));
  Vector alternating(p.dim);
  for (int i = 0; i < p.dim; ++i) alternating[i] = (i % 2 == 0 ? 1.7 : -0.6) * (i + 1);
  probes.push_back(alternating);
  probes.push_back(-3.1 * p.x0 + Vector::Constant(p.dim, 0.45));

  const double times[] = {p.t0, 0.5 * (p.t0 + p.t_end), p.t_end};
  for (double t : times) {
    const LinearizationData ref = linearize(p, t, probes.front());
    double scale = 1.0;
    for (int k = 0; k <= p.noise_dim; ++k) {
      scale = std::max({scale, ref.B[k].cwiseAbs().maxCoeff(), ref.b0[k].cwiseAbs().maxCoeff(),
                        ref.b1[k].cwiseAbs().maxCoeff()});
    }
    for (std::size_t i = 1; i < probes.size(); ++i) {
      const LinearizationData other = linearize(p, t, probes[i]);
      for (int k = 0; k <= p.noise_dim; ++k) {
        if (!close(ref.B[k], other.B[k], scale) || !close(ref.b0[k], other.b0[k], scale) ||
            !close(ref.b1[k], other.b1[k], scale)) {
          return false;
        }
      }
    }
  }
  return true;
}

}  // namespace llweak
