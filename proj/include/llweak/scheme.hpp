#pragma once

#include "llweak/linalg.hpp"
#include "llweak/sde_model.hpp"
#include "llweak/time_grid.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

/// The weak local linearization scheme.
///
/// Each step freezes the linearization of the SDE at the current iterate,
/// computes the conditional mean mu and second moment sigma of the resulting
/// linear SDE over the step, and draws the next iterate as
/// mu + sqrt(sigma - mu mu^T) eta with eta a vector of independent signs.
namespace llweak {

/// Augmented linear system whose exponential yields one step's moments.
///
/// Rows and columns are split into blocks of sizes d^2, d+2, d+2, 1, 1, 1:
///
///   M = [ A  B5 B4 B3 B2 B1 ]     u = [ vec(z z^T) ]
///       [ 0  C  I  0  0  0  ]         [ 0          ]
///       [ 0  0  C  0  0  0  ]         [ r          ]
///       [ 0  0  0  0  2  0  ]         [ 0          ]
///       [ 0  0  0  0  0  1  ]         [ 0          ]
///       [ 0  0  0  0  0  0  ]         [ 1          ]
///
/// mu = z + L2 exp(M h) u and vec(sigma) = L1 exp(M h) u.
struct AugmentedSystem {
  Matrix M;
  Vector u;
  Matrix L1;
  Matrix L2;

  int dim() const;
};

/// Size d^2 + 2d + 7 of the augmented system.
constexpr int augmented_size(int d) { return d * d + 2 * d + 7; }

AugmentedSystem build_augmented(const LinearizationData& lin, const Vector& z);

/// Conditional moments of one step.
struct StepMoments {
  Vector mu;
  Matrix sigma;     ///< second moment, symmetrized
  Matrix cov;       ///< sigma - mu mu^T, symmetrized
  Matrix sqrt_cov;  ///< symmetric PSD factor of cov
};

/// Symmetrizes sigma and forms the covariance and its square root.
/// Throws linalg::NotPositiveSemidefinite if the covariance is indefinite.
StepMoments make_step_moments(Vector mu, const Matrix& sigma);

StepMoments step_moments_expm(const AugmentedSystem& aug, const Vector& z, double h);

/// RK4 integration of the moment ODEs
///   mu' = B0 mu + b0(s),
///   sigma' = sigma B0^T + B0 sigma + mu b0^T + b0 mu^T
///            + sum_k (Bk sigma Bk^T + Bk mu bk^T + bk mu^T Bk^T + bk bk^T)
/// from (z, z z^T). Independent of the augmented-matrix route.
StepMoments step_moments_ode(const LinearizationData& lin, const Vector& z, double h,
                             int substeps = 64);

/// z' = mu + sqrt_cov * eta.
Vector ll_step(const StepMoments& sm, const Vector& eta);

/// Exact one-step moment map of a linear SDE whose linearization does not
/// depend on the anchor state.
///
/// Same block structure as AugmentedSystem, except the anchor is carried in
/// the initial vector instead of the matrix: the C blocks use b^{0,0} in
/// their last column, the third block of the initial vector is (z, 0, 1),
/// and B1, B2 drop their z terms. exp(M h) is therefore computed once and
/// reused for every anchor.
class LinearMomentMap {
 public:
  LinearMomentMap(const LinearizationData& lin, double h);

  /// Conditional (mu, sigma) for anchor z.
  StepMoments apply(const Vector& z) const;
  /// Conditional (mu, sigma) without forming the square root.
  void apply(const Vector& z, Vector& mu, Matrix& sigma) const;
  /// (E mu, E sigma) for a random anchor with the given first two moments.
  void propagate(const Vector& mean, const Matrix& second, Vector& next_mean,
                 Matrix& next_second) const;

  const Matrix& augmented() const { return M_; }
  int dim() const { return d_; }
  double step() const { return h_; }

 private:
  Vector initial_vector(const Vector& mean, const Matrix& second) const;

  int d_;
  double h_;
  Matrix M_;
  Matrix sigma_rows_;
  Matrix mu_rows_;
};

/// Raised when a step cannot be completed.
class StepFailure : public std::runtime_error {
 public:
  StepFailure(std::size_t step, double time, double min_eigenvalue, const std::string& detail);

  std::size_t step() const noexcept { return step_; }
  double time() const noexcept { return time_; }
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  std::size_t step_;
  double time_;
  double min_eigenvalue_;
};

/// Computes step moments for a fixed problem, reusing exp(M h) across steps
/// when the SDE is linear.
///
/// Not thread-safe; each worker owns one.
class LlStepper {
 public:
  explicit LlStepper(const SdeProblem& p, bool allow_cache = true);

  StepMoments moments(double t, const Vector& z, double h);
  Vector step(double t, const Vector& z, double h, const Vector& eta);

  bool caching() const { return state_independent_; }

  /// One-step moment map at (t, h). Only valid when caching() is true.
  const LinearMomentMap& linear_map(double t, double h);

 private:
  const SdeProblem* problem_;
  bool state_independent_ = false;
  bool time_independent_ = false;
  std::optional<LinearizationData> cached_lin_;
  std::optional<LinearMomentMap> cached_map_;
};

/// Runs the scheme over grid from z0 with the given per-step sign vectors.
/// Returns z_0..z_N. Throws StepFailure on an indefinite covariance or a
/// non-finite state.
std::vector<Vector> integrate_path(const SdeProblem& p, const Vector& z0, const TimeGrid& grid,
                                   std::span<const Vector> noise, bool allow_cache = true);

/// First two moments of the scheme's iterates at each grid node.
struct MomentTrajectory {
  std::vector<Vector> mean;
  std::vector<Matrix> second;

  Moments at(std::size_t n) const { return Moments::from_second_moment(mean[n], second[n]); }
};

/// Exact mean and second moment of the scheme's iterates on a linear SDE,
/// obtained by chaining the one-step moment maps from the deterministic
/// initial state p.x0. Throws std::invalid_argument if the linearization of p
/// depends on the state.
MomentTrajectory moment_propagate(const SdeProblem& p, const TimeGrid& grid);

}  // namespace llweak
