#include "llweak/baselines.hpp"
#include "llweak/problems.hpp"
#include "llweak/scheme.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace llweak;
using baselines::euler_weak_step;
using baselines::FunctionalEstimate;
using baselines::romberg_estimate;

namespace {

SdeProblem zero_problem(int d, int m) {
  SdeProblem p;
  p.dim = d;
  p.noise_dim = m;
  p.x0 = Vector::Zero(d);
  for (int k = 0; k <= m; ++k) {
    p.coefficients.push_back([d](double, const Vector&) -> Vector { return Vector::Zero(d); });
  }
  return p;
}

Vector signs(int mask, int m) {
  Vector eta(m);
  for (int i = 0; i < m; ++i) eta[i] = (mask >> i) & 1 ? 1.0 : -1.0;
  return eta;
}

// E|z_N|^2 of weak Euler on Example 2 by exhaustive enumeration of the 4^N
// increment sequences.
double enumerate_euler_second_moment(const SdeProblem& p, double h, int steps) {
  double total = 0.0;
  const int outcomes = 1 << (2 * steps);
  for (int path = 0; path < outcomes; ++path) {
    Vector z = p.x0;
    for (int n = 0; n < steps; ++n) {
      z = euler_weak_step(p, n * h, z, h, signs(path >> (2 * n), 2));
    }
    total += z.squaredNorm();
  }
  return total / outcomes;
}

}  // namespace

TEST(EulerStep, ZeroCoefficientsKeepState) {
  const SdeProblem p = zero_problem(3, 2);
  const Vector z = Eigen::Vector3d(1.0, -2.0, 3.0);
  EXPECT_EQ(euler_weak_step(p, 0.0, z, 0.1, Eigen::Vector2d(1.0, -1.0)), z);
}

TEST(EulerStep, EnumerationGivesConditionalMoments) {
  const SdeProblem p = problems::make_example2();
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 5; ++trial) {
    const Vector z = test::random_vector(gen, 2, -2.0, 2.0);
    const double t = 0.7 * trial;
    const double h = 0.05;
    Vector mean = Vector::Zero(2);
    Matrix second = Matrix::Zero(2, 2);
    for (int mask = 0; mask < 4; ++mask) {
      const Vector next = euler_weak_step(p, t, z, h, signs(mask, 2));
      mean += next / 4.0;
      second += next * next.transpose() / 4.0;
    }
    const Vector drifted = z + p.drift(t, z) * h;
    Matrix want = drifted * drifted.transpose();
    for (int k = 1; k <= 2; ++k) {
      const Vector g = p.diffusion(k, t, z);
      want += h * g * g.transpose();
    }
    EXPECT_LT((mean - drifted).norm(), 1e-15);
    EXPECT_LT((second - want).norm(), 1e-14);
  }
}

TEST(EulerStep, Example2SecondMomentRecursion) {
  const SdeProblem p = problems::make_example2();
  const double h = 0.5;
  const int steps = 6;
  double recursion = p.x0.squaredNorm();
  for (int n = 0; n < steps; ++n) recursion = (1.0 + h * h) * recursion + h / (1.0 + n * h);
  EXPECT_NEAR(enumerate_euler_second_moment(p, h, steps), recursion, 1e-12 * recursion);
}

TEST(EulerStep, RejectsBadArguments) {
  const SdeProblem p = problems::make_example2();
  EXPECT_THROW(euler_weak_step(p, 0.0, p.x0, 0.0, Eigen::Vector2d(1, 1)), std::invalid_argument);
  EXPECT_THROW(euler_weak_step(p, 0.0, p.x0, 0.1, Vector::Ones(3)), std::invalid_argument);
}

TEST(EulerStep, OverflowDetection) {
  EXPECT_FALSE(baselines::overflowed(Eigen::Vector2d(1e11, 1e11)));
  EXPECT_TRUE(baselines::overflowed(Eigen::Vector2d(1e12, 1e12)));
  EXPECT_TRUE(baselines::overflowed(Eigen::Vector2d(std::numeric_limits<double>::infinity(), 0)));
  EXPECT_TRUE(baselines::overflowed(Eigen::Vector2d(std::nan(""), 0)));
}

TEST(EulerStep, MeanAgreesWithLlToSecondOrder) {
  std::mt19937_64 gen(32);
  const SdeProblem p = test::random_linear_problem(gen, 2, 2);
  const Vector z = test::random_vector(gen, 2);
  std::vector<double> ratios;
  for (double h : {1.0 / 8, 1.0 / 16, 1.0 / 32}) {
    Vector euler_mean = Vector::Zero(2);
    for (int mask = 0; mask < 4; ++mask) {
      euler_mean += euler_weak_step(p, 0.0, z, h, signs(mask, 2)) / 4.0;
    }
    const LinearizationData lin = linearize(p, 0.0, z);
    const StepMoments sm = step_moments_expm(build_augmented(lin, z), z, h);
    ratios.push_back((euler_mean - sm.mu).norm() / (h * h));
  }
  EXPECT_GT(ratios.front(), 0.0);
  for (double r : ratios) {
    EXPECT_LT(r / ratios.back(), 1.5);
    EXPECT_GT(r / ratios.back(), 1.0 / 1.5);
  }
}

TEST(Romberg, FixedPoint) {
  const FunctionalEstimate e = romberg_estimate({0.2, 3.5}, {0.1, 3.5});
  EXPECT_DOUBLE_EQ(e.value, 3.5);
  EXPECT_DOUBLE_EQ(e.step, 0.1);
}

TEST(Romberg, RemovesLinearBias) {
  const double exact = 2.75;
  const double c = -1.3;
  for (double h : {1.0, 0.5, 0.125}) {
    const FunctionalEstimate e = romberg_estimate({h, exact + c * h}, {h / 2, exact + c * h / 2});
    EXPECT_NEAR(e.value, exact, 1e-14);
  }
}

TEST(Romberg, RejectsStepRatio) {
  EXPECT_THROW(romberg_estimate({0.2, 1.0}, {0.15, 1.0}), std::invalid_argument);
  EXPECT_THROW(romberg_estimate({0.0, 1.0}, {0.0, 1.0}), std::invalid_argument);
}
