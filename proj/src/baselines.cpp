#include "llweak/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace llweak::baselines {

Vector euler_weak_step(const SdeProblem& p, double t, const Vector& z, double h,
                       const Vector& eta) {
  if (!(h > 0.0)) throw std::invalid_argument("euler_weak_step: step must be positive");
  if (eta.size() != p.noise_dim) throw std::invalid_argument("euler_weak_step: eta has wrong length");
  const double root_h = std::sqrt(h);
  Vector next = z + p.drift(t, z) * h;
  for (int k = 1; k <= p.noise_dim; ++k) {
    next += p.diffusion(k, t, z) * (root_h * eta[k - 1]);
  }
  return next;
}

bool overflowed(const Vector& z) { return !z.allFinite() || z.norm() > kOverflowNorm; }

FunctionalEstimate romberg_estimate(const FunctionalEstimate& coarse,
                                    const FunctionalEstimate& fine) {
  if (!(coarse.step > 0.0) ||
      std::abs(coarse.step - 2.0 * fine.step) > 1e-12 * coarse.step) {
    throw std::invalid_argument("romberg_estimate: fine step must be half the coarse step");
  }
  return FunctionalEstimate{fine.step, 2.0 * fine.value - coarse.value};
}

}  // namespace llweak::baselines
