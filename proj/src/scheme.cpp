#include "llweak/scheme.hpp"

#include <sstream>

namespace llweak {

using linalg::Index;
using linalg::kron;
using linalg::kron_sum;
using linalg::vec;

namespace {

struct Offsets {
  Index d2, o2, o3, o4, o5, o6, n;
  explicit Offsets(Index d)
      : d2(d * d), o2(d2), o3(d2 + d + 2), o4(d2 + 2 * d + 4), o5(o4 + 1), o6(o4 + 2), n(o4 + 3) {}
};

struct Betas {
  Matrix beta1, beta2, beta3, beta4, beta5;
};

Betas compute_betas(const LinearizationData& lin) {
  const Index d = lin.dim();
  Betas b{Matrix::Zero(d, d), Matrix::Zero(d, d), Matrix::Zero(d, d),
          kron_sum(lin.b0[0], lin.b0[0]), kron_sum(lin.b1[0], lin.b1[0])};
  for (int k = 1; k <= lin.noise_dim(); ++k) {
    const Vector& c0 = lin.b0[k];
    const Vector& c1 = lin.b1[k];
    b.beta1 += c0 * c0.transpose();
    b.beta2 += c0 * c1.transpose() + c1 * c0.transpose();
    b.beta3 += c1 * c1.transpose();
    b.beta4 += kron(c0, lin.B[k]) + kron(lin.B[k], c0);
    b.beta5 += kron(c1, lin.B[k]) + kron(lin.B[k], c1);
  }
  return b;
}

// vec(sigma B^T + B sigma + sum_k Bk sigma Bk^T) = A vec(sigma).
Matrix second_moment_generator(const LinearizationData& lin) {
  Matrix a = kron_sum(lin.B[0], lin.B[0]);
  for (int k = 1; k <= lin.noise_dim(); ++k) a += kron(lin.B[k], lin.B[k]);
  return a;
}

Matrix assemble(const LinearizationData& lin, const Betas& beta, const Vector& c_last,
                const Vector& col_b2, const Vector& col_b1) {
  const Index d = lin.dim();
  const Offsets o(d);

  Matrix c = Matrix::Zero(d + 2, d + 2);
  c.topLeftCorner(d, d) = lin.B[0];
  c.block(0, d, d, 1) = lin.b1[0];
  c.block(0, d + 1, d, 1) = c_last;
  c(d, d + 1) = 1.0;

  Matrix m = Matrix::Zero(o.n, o.n);
  m.topLeftCorner(o.d2, o.d2) = second_moment_generator(lin);
  m.block(0, o.o2, o.d2, d) = beta.beta5;
  m.block(0, o.o3, o.d2, d) = beta.beta4;
  m.col(o.o4).head(o.d2) = vec(beta.beta3);
  m.col(o.o5).head(o.d2) = col_b2;
  m.col(o.o6).head(o.d2) = col_b1;
  m.block(o.o2, o.o2, d + 2, d + 2) = c;
  m.block(o.o2, o.o3, d + 2, d + 2) = Matrix::Identity(d + 2, d + 2);
  m.block(o.o3, o.o3, d + 2, d + 2) = c;
  m(o.o4, o.o5) = 2.0;
  m(o.o5, o.o6) = 1.0;
  return m;
}

void check_anchor(const LinearizationData& lin, const Vector& z) {
  if (z.size() != lin.dim()) throw std::invalid_argument("anchor has wrong dimension");
}

std::string failure_message(std::size_t step, double time, const std::string& detail) {
  std::ostringstream os;
  os.precision(17);
  os << "step " << step << " at t=" << time << " failed: " << detail;
  return os.str();
}

}  // namespace

int AugmentedSystem::dim() const { return static_cast<int>(L2.rows()); }

AugmentedSystem build_augmented(const LinearizationData& lin, const Vector& z) {
  check_anchor(lin, z);
  const Index d = lin.dim();
  const Offsets o(d);
  const Betas beta = compute_betas(lin);

  AugmentedSystem aug;
  aug.M = assemble(lin, beta, lin.B[0] * z + lin.b0[0], vec(beta.beta2) + beta.beta5 * z,
                   vec(beta.beta1) + beta.beta4 * z);
  aug.u = Vector::Zero(o.n);
  aug.u.head(o.d2) = vec(z * z.transpose());
  aug.u[o.o3 + d + 1] = 1.0;
  aug.u[o.o6] = 1.0;
  aug.L1 = Matrix::Zero(o.d2, o.n);
  aug.L1.leftCols(o.d2).setIdentity();
  aug.L2 = Matrix::Zero(d, o.n);
  aug.L2.block(0, o.o3, d, d).setIdentity();
  return aug;
}

StepMoments make_step_moments(Vector mu, const Matrix& sigma) {
  StepMoments sm;
  sm.sigma = linalg::symmetrized(sigma);
  sm.cov = linalg::symmetrized(sm.sigma - mu * mu.transpose());
  sm.sqrt_cov = linalg::psd_sqrt(sm.cov);
  sm.mu = std::move(mu);
  return sm;
}

StepMoments step_moments_expm(const AugmentedSystem& aug, const Vector& z, double h) {
  if (!(h >= 0.0)) throw std::invalid_argument("step_moments_expm: negative step");
  const Index d = aug.dim();
  if (z.size() != d) throw std::invalid_argument("step_moments_expm: anchor has wrong dimension");
  const Vector w = linalg::expm(aug.M * h) * aug.u;
  return make_step_moments(z + aug.L2 * w, linalg::unvec(aug.L1 * w, d));
}

StepMoments step_moments_ode(const LinearizationData& lin, const Vector& z, double h,
                             int substeps) {
  check_anchor(lin, z);
  if (substeps < 1) throw std::invalid_argument("step_moments_ode: substeps must be >= 1");
  if (!(h >= 0.0)) throw std::invalid_argument("step_moments_ode: negative step");

  const int m = lin.noise_dim();
  const Matrix& b0mat = lin.B[0];
  auto rhs = [&](double s, const Vector& mu, const Matrix& sigma, Vector& dmu, Matrix& dsigma) {
    const Vector drift = lin.b(0, s);
    dmu = b0mat * mu + drift;
    dsigma = sigma * b0mat.transpose() + b0mat * sigma + mu * drift.transpose() +
             drift * mu.transpose();
    for (int k = 1; k <= m; ++k) {
      const Matrix& bk = lin.B[k];
      const Vector c = lin.b(k, s);
      const Vector bmu = bk * mu;
      dsigma += bk * sigma * bk.transpose() + bmu * c.transpose() + c * bmu.transpose() +
                c * c.transpose();
    }
  };

  Vector mu = z;
  Matrix sigma = z * z.transpose();
  const double dt = h / substeps;
  Vector k1m, k2m, k3m, k4m;
  Matrix k1s, k2s, k3s, k4s;
  double s = lin.tau;
  for (int i = 0; i < substeps && h > 0.0; ++i) {
    rhs(s, mu, sigma, k1m, k1s);
    rhs(s + 0.5 * dt, mu + 0.5 * dt * k1m, sigma + 0.5 * dt * k1s, k2m, k2s);
    rhs(s + 0.5 * dt, mu + 0.5 * dt * k2m, sigma + 0.5 * dt * k2s, k3m, k3s);
    rhs(s + dt, mu + dt * k3m, sigma + dt * k3s, k4m, k4s);
    mu += dt / 6.0 * (k1m + 2.0 * k2m + 2.0 * k3m + k4m);
    sigma += dt / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
    s = lin.tau + (i + 1) * dt;
  }
  return make_step_moments(std::move(mu), sigma);
}

Vector ll_step(const StepMoments& sm, const Vector& eta) {
  if (eta.size() != sm.mu.size()) throw std::invalid_argument("ll_step: eta has wrong length");
  return sm.mu + sm.sqrt_cov * eta;
}

// LinearMomentMap

LinearMomentMap::LinearMomentMap(const LinearizationData& lin, double h)
    : d_(lin.dim()), h_(h) {
  if (!(h >= 0.0)) throw std::invalid_argument("LinearMomentMap: negative step");
  const Offsets o(d_);
  const Betas beta = compute_betas(lin);
  M_ = assemble(lin, beta, lin.b0[0], vec(beta.beta2), vec(beta.beta1));
  const Matrix e = linalg::expm(M_ * h);
  sigma_rows_ = e.topRows(o.d2);
  mu_rows_ = e.middleRows(o.o3, d_);
}

Vector LinearMomentMap::initial_vector(const Vector& mean, const Matrix& second) const {
  const Offsets o(d_);
  Vector u = Vector::Zero(o.n);
  u.head(o.d2) = vec(second);
  u.segment(o.o3, d_) = mean;
  u[o.o3 + d_ + 1] = 1.0;
  u[o.o6] = 1.0;
  return u;
}

void LinearMomentMap::apply(const Vector& z, Vector& mu, Matrix& sigma) const {
  if (z.size() != d_) throw std::invalid_argument("LinearMomentMap: anchor has wrong dimension");
  propagate(z, z * z.transpose(), mu, sigma);
}

StepMoments LinearMomentMap::apply(const Vector& z) const {
  Vector mu;
  Matrix sigma;
  apply(z, mu, sigma);
  return make_step_moments(std::move(mu), sigma);
}

void LinearMomentMap::propagate(const Vector& mean, const Matrix& second, Vector& next_mean,
                                Matrix& next_second) const {
  const Vector u = initial_vector(mean, second);
  next_mean = mu_rows_ * u;
  next_second = linalg::symmetrized(linalg::unvec(sigma_rows_ * u, d_));
}

// StepFailure

StepFailure::StepFailure(std::size_t step, double time, double min_eigenvalue,
                         const std::string& detail)
    : std::runtime_error(failure_message(step, time, detail)),
      step_(step),
      time_(time),
      min_eigenvalue_(min_eigenvalue) {}

// LlStepper

LlStepper::LlStepper(const SdeProblem& p, bool allow_cache) : problem_(&p) {
  p.validate();
  if (!allow_cache) return;
  state_independent_ = has_state_independent_linearization(p);
  if (state_independent_) {
    const Vector origin = Vector::Zero(p.dim);
    const LinearizationData first = linearize(p, p.t0, origin);
    const LinearizationData last = linearize(p, p.t_end, origin);
    const LinearizationData mid = linearize(p, 0.5 * (p.t0 + p.t_end), origin);
    auto same = [&](const LinearizationData& a, const LinearizationData& b) {
      for (int k = 0; k <= p.noise_dim; ++k) {
        if (a.B[k] != b.B[k] || a.b0[k] != b.b0[k] || a.b1[k] != b.b1[k]) return false;
      }
      return true;
    };
    time_independent_ = same(first, last) && same(first, mid);
  }
}

const LinearMomentMap& LlStepper::linear_map(double t, double h) {
  if (!state_independent_) throw std::logic_error("LlStepper: no linear map for a nonlinear SDE");
  const Vector origin = Vector::Zero(problem_->dim);
  if (time_independent_ && cached_map_ && cached_map_->step() == h) return *cached_map_;
  LinearizationData lin = linearize(*problem_, t, origin);
  bool reuse = cached_map_ && cached_map_->step() == h && cached_lin_;
  if (reuse) {
    for (int k = 0; k <= problem_->noise_dim && reuse; ++k) {
      reuse = lin.B[k] == cached_lin_->B[k] && lin.b0[k] == cached_lin_->b0[k] &&
              lin.b1[k] == cached_lin_->b1[k];
    }
  }
  if (!reuse) {
    cached_map_.emplace(lin, h);
    cached_lin_ = std::move(lin);
  }
  return *cached_map_;
}

StepMoments LlStepper::moments(double t, const Vector& z, double h) {
  if (state_independent_) return linear_map(t, h).apply(z);
  const LinearizationData lin = linearize(*problem_, t, z);
  return step_moments_expm(build_augmented(lin, z), z, h);
}

Vector LlStepper::step(double t, const Vector& z, double h, const Vector& eta) {
  return ll_step(moments(t, z, h), eta);
}

std::vector<Vector> integrate_path(const SdeProblem& p, const Vector& z0, const TimeGrid& grid,
                                   std::span<const Vector> noise, bool allow_cache) {
  if (noise.size() < grid.steps()) {
    throw std::invalid_argument("integrate_path: fewer noise vectors than steps");
  }
  if (z0.size() != p.dim) throw std::invalid_argument("integrate_path: z0 has wrong length");
  LlStepper stepper(p, allow_cache);
  std::vector<Vector> states;
  states.reserve(grid.size());
  states.push_back(z0);
  for (std::size_t n = 0; n < grid.steps(); ++n) {
    try {
      states.push_back(stepper.step(grid[n], states.back(), grid.step(n), noise[n]));
    } catch (const linalg::NotPositiveSemidefinite& e) {
      throw StepFailure(n, grid[n], e.min_eigenvalue(), e.what());
    } catch (const std::domain_error& e) {
      throw StepFailure(n, grid[n], 0.0, e.what());
    } catch (const std::overflow_error& e) {
      throw StepFailure(n, grid[n], 0.0, e.what());
    }
    if (!linalg::all_finite(states.back())) {
      throw StepFailure(n, grid[n], 0.0, "non-finite state");
    }
  }
  return states;
}

MomentTrajectory moment_propagate(const SdeProblem& p, const TimeGrid& grid) {
  LlStepper stepper(p);
  if (!stepper.caching()) {
    throw std::invalid_argument("moment_propagate: linearization depends on the state");
  }
  MomentTrajectory out;
  out.mean.reserve(grid.size());
  out.second.reserve(grid.size());
  out.mean.push_back(p.x0);
  out.second.push_back(p.x0 * p.x0.transpose());
  Vector mean;
  Matrix second;
  for (std::size_t n = 0; n < grid.steps(); ++n) {
    stepper.linear_map(grid[n], grid.step(n))
        .propagate(out.mean.back(), out.second.back(), mean, second);
    out.mean.push_back(mean);
    out.second.push_back(second);
  }
  return out;
}

}  // namespace llweak
