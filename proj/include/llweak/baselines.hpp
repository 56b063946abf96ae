#pragma once

#include "llweak/sde_model.hpp"

namespace llweak::baselines {

/// Norm above which a trajectory counts as overflowed.
inline constexpr double kOverflowNorm = 1e12;

/// Weak Euler step with two-point increments:
/// z' = z + f(t,z) h + sum_k g^k(t,z) sqrt(h) eta[k].
/// The result may be non-finite; check it with overflowed().
Vector euler_weak_step(const SdeProblem& p, double t, const Vector& z, double h,
                       const Vector& eta);

/// True for a non-finite state or one whose norm exceeds kOverflowNorm.
bool overflowed(const Vector& z);

/// A functional estimate produced with a given stepsize.
struct FunctionalEstimate {
  double step = 0.0;
  double value = 0.0;
};

/// First-order Richardson extrapolation 2 E(h/2) - E(h) of a weak order-1
/// scheme. Throws std::invalid_argument unless fine.step == coarse.step / 2.
FunctionalEstimate romberg_estimate(const FunctionalEstimate& coarse,
                                    const FunctionalEstimate& fine);

}  // namespace llweak::baselines
