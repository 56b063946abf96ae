#include "llweak/ensemble.hpp"
#include "llweak/problems.hpp"
#include "llweak/rng.hpp"
#include "llweak/statistics.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>

using namespace llweak;
using test::oracle_t_cdf;
using test::oracle_t_quantile;

namespace {

bool bit_equal(const Matrix& a, const Matrix& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

bool bit_equal(const stats::NodeSums& a, const stats::NodeSums& b) {
  return bit_equal(a.sum, b.sum) && bit_equal(a.sum_outer, b.sum_outer) &&
         bit_equal(a.sum_arctan, b.sum_arctan);
}

Moments constant_moments(double m1, double m2) {
  return Moments{Eigen::Vector2d(m1, m2), Matrix::Identity(2, 2)};
}

}  // namespace

TEST(Philox, KnownAnswerVectors) {
  const auto a = philox4x64({0x243f6a8885a308d3ULL, 0x13198a2e03707344ULL, 0xa4093822299f31d0ULL,
                             0x082efa98ec4e6c89ULL},
                            {0x452821e638d01377ULL, 0xbe5466cf34e90c6cULL});
  EXPECT_EQ(a[0], 0xa528f45403e61d95ULL);
  EXPECT_EQ(a[1], 0x38c72dbd566e9788ULL);
  EXPECT_EQ(a[2], 0xa5a1610e72fd18b5ULL);
  EXPECT_EQ(a[3], 0x57bd43b5e52b7fe6ULL);

  const auto b = philox4x64({5, 7, 0, 0}, {42, 0});
  EXPECT_EQ(b[0], 0x5cb18e1508b04f4fULL);
  EXPECT_EQ(b[1], 0x7696f2345c36b662ULL);
  EXPECT_EQ(b[2], 0x1c33c6b172efb114ULL);
  EXPECT_EQ(b[3], 0x379fdcafde95277eULL);
}

TEST(RngStreamTest, DrawsArePureFunctionsOfTheirCoordinates) {
  RngStream s(42, 7);
  for (std::uint64_t c = 0; c < 10; ++c) EXPECT_EQ(s.next_u64(), counter_draw(42, 7, c));
  EXPECT_EQ(s.counter(), 10u);
  RngStream resumed(42, 7, 5);
  EXPECT_EQ(resumed.next_u64(), counter_draw(42, 7, 5));
  EXPECT_NE(counter_draw(42, 7, 0), counter_draw(42, 8, 0));
  EXPECT_NE(counter_draw(42, 7, 0), counter_draw(43, 7, 0));
}

TEST(RngStreamTest, TwoPointMoments) {
  RngStream s(1, 0);
  const int n = 1000000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double eta = s.two_point();
    ASSERT_EQ(eta * eta, 1.0);
    sum += eta;
  }
  EXPECT_GT(sum / n, -0.004);
  EXPECT_LT(sum / n, 0.004);
}

TEST(RngStreamTest, UniformIsInOpenIntervalAndFlat) {
  RngStream s(3, 1);
  const int n = 200000;
  const int bins = 20;
  std::vector<int> counts(bins, 0);
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    ++counts[static_cast<int>(u * bins)];
  }
  double chi2 = 0.0;
  const double expected = static_cast<double>(n) / bins;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi2, 43.8);  // 0.999 quantile of chi^2 with 19 dof
}

TEST(RngStreamTest, DistinctStreamsAreUncorrelated) {
  const int n = 100000;
  for (std::uint64_t stream : {1ULL, 2ULL, 1000ULL}) {
    RngStream a(9, 0), b(9, stream);
    double sab = 0.0;
    for (int i = 0; i < n; ++i) sab += a.two_point() * b.two_point();
    EXPECT_LT(std::abs(sab / n), 4.0 / std::sqrt(n)) << "stream " << stream;
  }
}

TEST(RngStreamTest, GaussianMoments) {
  RngStream s(5, 2);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = s.gaussian();
    sum += g;
    sum2 += g * g;
    sum4 += g * g * g * g;
  }
  EXPECT_LT(std::abs(sum / n), 4.0 / std::sqrt(n));
  EXPECT_LT(std::abs(sum2 / n - 1.0), 4.0 * std::sqrt(2.0 / n));
  EXPECT_LT(std::abs(sum4 / n - 3.0), 4.0 * std::sqrt(96.0 / n));
}

TEST(StudentT, QuantileMatchesCdfBisectionOracle) {
  for (double df : {9.0, 99.0, 999.0}) {
    for (double p : {0.95, 0.975}) {
      EXPECT_NEAR(stats::student_t_quantile(p, df), oracle_t_quantile(p, df), 1e-8)
          << "df=" << df << " p=" << p;
    }
  }
}

TEST(StudentT, ReferenceQuantiles) {
  EXPECT_NEAR(stats::student_t_quantile(0.95, 99.0), 1.6603911560169909, 1e-12);
  EXPECT_NEAR(stats::student_t_quantile(0.975, 9.0), 2.2621571627982055, 1e-12);
  EXPECT_NEAR(stats::student_t_quantile(0.05, 99.0), -1.6603911560169909, 1e-12);
  EXPECT_EQ(stats::student_t_quantile(0.5, 4.0), 0.0);
  EXPECT_THROW(stats::student_t_quantile(1.0, 4.0), std::invalid_argument);
}

TEST(StudentT, CdfMatchesOracle) {
  for (double df : {1.0, 3.5, 30.0}) {
    for (double t : {-3.0, -0.2, 0.0, 1.1, 6.0}) {
      EXPECT_NEAR(stats::student_t_cdf(t, df), oracle_t_cdf(t, df), 1e-13);
    }
  }
}

TEST(EstimateMoments, ConstantSamples) {
  const std::vector<Vector> samples(5, Eigen::Vector2d(1.5, -2.0));
  const Moments m = stats::estimate_moments(samples);
  EXPECT_LT((m.mean - Eigen::Vector2d(1.5, -2.0)).norm(), 1e-15);
  EXPECT_LT(m.variance.norm(), 1e-14);
}

TEST(EstimateMoments, TwoPointScalar) {
  const std::vector<Vector> samples{Vector::Constant(1, 1.0), Vector::Constant(1, -1.0)};
  const Moments m = stats::estimate_moments(samples);
  EXPECT_EQ(m.mean[0], 0.0);
  EXPECT_EQ(m.variance(0, 0), 1.0);
}

TEST(EstimateMoments, Empty) {
  EXPECT_THROW(stats::estimate_moments(std::vector<Vector>{}), std::invalid_argument);
}

TEST(ErrorProfile, ExactEstimateGivesZero) {
  const std::vector<Moments> exact{constant_moments(1, 2), constant_moments(3, 4)};
  const stats::ErrorProfile prof = stats::error_profile(exact, exact);
  ASSERT_EQ(prof.types(), 5u);
  for (double e : prof.max) EXPECT_EQ(e, 0.0);
}

TEST(ErrorProfile, OffsetOnOneMean) {
  const std::vector<Moments> exact{constant_moments(1, 2), constant_moments(3, 4)};
  std::vector<Moments> est = exact;
  for (auto& m : est) m.mean[0] += 0.25;
  const stats::ErrorProfile prof = stats::error_profile(est, exact);
  EXPECT_DOUBLE_EQ(prof.max[0], 0.25);
  for (std::size_t l = 1; l < 5; ++l) EXPECT_EQ(prof.max[l], 0.0);
  EXPECT_EQ(stats::error_type_labels(2),
            (std::vector<std::string>{"m1", "m2", "v11", "v22", "v12"}));
}

TEST(ErrorProfile, GridMismatch) {
  const std::vector<Moments> a{constant_moments(1, 2)};
  const std::vector<Moments> b{constant_moments(1, 2), constant_moments(1, 2)};
  EXPECT_THROW(stats::error_profile(a, b), std::invalid_argument);
}

TEST(FitGamma, PowerLawAndConstant) {
  const std::vector<double> samples{256, 1024, 4096, 16384};
  std::vector<double> power, flat;
  for (double m : samples) {
    power.push_back(3.0 / std::sqrt(m));
    flat.push_back(0.7);
  }
  EXPECT_NEAR(stats::fit_slope(samples, power), 0.5, 1e-14);
  EXPECT_NEAR(stats::fit_slope(samples, flat), 0.0, 1e-14);
}

TEST(FitGamma, AveragesOverNodesAndCountsExclusions) {
  const std::vector<double> samples{256, 4096};
  std::vector<stats::ErrorProfile> profiles(2);
  for (std::size_t k = 0; k < 2; ++k) {
    profiles[k].per_node = {{0.0, 1.0 / std::sqrt(samples[k]), 1.0 / samples[k]}};
    profiles[k].max = {0.0};
  }
  const stats::GammaFit fit = stats::fit_gamma(samples, profiles, 0);
  EXPECT_EQ(fit.nodes_used, 2u);
  EXPECT_EQ(fit.points_excluded, 2u);
  EXPECT_NEAR(fit.mean, 0.75, 1e-14);
  EXPECT_NEAR(fit.std, std::sqrt(0.125), 1e-14);
}

TEST(FitGamma, TooFewPoints) {
  EXPECT_THROW(stats::fit_slope(std::vector<double>{256, 1024}, std::vector<double>{0.1, 0.0}),
               std::invalid_argument);
}

TEST(FunctionalError, ConstantBatches) {
  const std::vector<double> errors(7, -0.3);
  const stats::McEstimate e = stats::functional_error(errors);
  EXPECT_NEAR(e.value, -0.3, 1e-15);
  EXPECT_EQ(e.half_width, 0.0);
  EXPECT_EQ(e.batches, 7u);
}

TEST(FunctionalError, HalfWidthUsesStudentT) {
  const std::vector<double> errors{1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0};
  const stats::McEstimate e = stats::functional_error(errors);
  const double se = std::sqrt((55.0 / 6.0) / 10.0);
  EXPECT_DOUBLE_EQ(e.value, 5.5);
  EXPECT_NEAR(e.std_error, se, 1e-14);
  EXPECT_NEAR(e.half_width, 1.8331129326562372 * se, 1e-12);
}

TEST(FunctionalError, NeedsTwoBatches) {
  EXPECT_THROW(stats::functional_error(std::vector<double>{1.0}), std::invalid_argument);
}

TEST(FunctionalError, BatchErrorSign) {
  const std::vector<double> means{2.5, 3.0};
  EXPECT_EQ(stats::batch_errors(means, 2.0), (std::vector<double>{-0.5, -1.0}));
}

TEST(ArctanFunctional, IdenticalEnsemblesAndRange) {
  std::vector<stats::NodeSums> nodes(3, stats::NodeSums::zero(2));
  RngStream s(1, 1);
  for (auto& n : nodes) {
    for (int i = 0; i < 50; ++i) {
      const Vector z = Eigen::Vector2d(5.0 * s.gaussian(), s.gaussian());
      n.add(z);
      for (int l = 0; l < 2; ++l) {
        const double h = std::atan(1.0 + z[l] * z[l]);
        EXPECT_GE(h, std::numbers::pi / 4);
        EXPECT_LE(h, std::numbers::pi / 2);
      }
    }
  }
  EXPECT_EQ(stats::arctan_functional_error(nodes, 50, nodes, 50, 0), 0.0);
  EXPECT_THROW(stats::arctan_functional_error(nodes, 50, std::span(nodes).first(2), 50, 0),
               std::invalid_argument);
}

TEST(Ensemble, BitIdenticalAcrossThreadCounts) {
  for (const char* name : {"example2", "example1"}) {
    const SdeProblem p = problems::make_problem(name);
    const TimeGrid grid = TimeGrid::uniform(0.0, 1.0, 0.125);
    for (mc::SchemeKind scheme : {mc::SchemeKind::llweak, mc::SchemeKind::euler}) {
      mc::EnsembleConfig cfg{.scheme = scheme, .samples = 300, .seed = 17, .threads = 1,
                             .keep_terminal = true};
      const mc::EnsembleResult one = mc::simulate_ensemble(p, grid, cfg);
      cfg.threads = 3;
      const mc::EnsembleResult three = mc::simulate_ensemble(p, grid, cfg);
      ASSERT_EQ(one.nodes.size(), three.nodes.size());
      for (std::size_t n = 0; n < one.nodes.size(); ++n) {
        EXPECT_TRUE(bit_equal(one.nodes[n], three.nodes[n])) << name << " node " << n;
      }
      for (std::size_t i = 0; i < one.terminal.size(); ++i) {
        EXPECT_TRUE(bit_equal(one.terminal[i], three.terminal[i]));
      }
    }
  }
}

TEST(Ensemble, ExactSchemeNeedsSampler) {
  const SdeProblem p = problems::make_example2();
  const mc::EnsembleConfig cfg{.scheme = mc::SchemeKind::exact, .samples = 4};
  EXPECT_THROW(mc::simulate_ensemble(p, TimeGrid::uniform(0.0, 1.0, 0.5), cfg),
               std::invalid_argument);
}

TEST(Ensemble, EulerOverflowIsCounted) {
  const SdeProblem p = problems::make_example2();
  const TimeGrid grid = TimeGrid::uniform(0.0, 10.0, 10.0 / 3.0);
  const mc::EnsembleConfig cfg{.scheme = mc::SchemeKind::euler, .samples = 64, .seed = 1,
                               .threads = 1, .keep_terminal = true};
  SdeProblem fast = p;
  fast.coefficients[0] = [](double, const Vector& x) -> Vector { return 1e5 * x; };
  const mc::EnsembleResult r = mc::simulate_ensemble(fast, grid, cfg);
  EXPECT_EQ(r.overflowed, 64u);
  EXPECT_EQ(r.completed(), 0u);
  const auto means = mc::batch_means_squared_norm(r, 32);
  EXPECT_TRUE(std::isnan(means[0]));
}

TEST(Ensemble, EulerExample2MatchesSecondMomentRecursion) {
  const SdeProblem p = problems::make_example2();
  const double h = 0.25;
  const TimeGrid grid = TimeGrid::uniform(0.0, 10.0, h);
  const mc::EnsembleConfig cfg{.scheme = mc::SchemeKind::euler, .samples = 10000, .seed = 3,
                               .threads = 1, .keep_nodes = false, .keep_terminal = true};
  const mc::EnsembleResult r = mc::simulate_ensemble(p, grid, cfg);
  double exact_euler = p.x0.squaredNorm();
  for (std::size_t n = 0; n < grid.steps(); ++n) {
    exact_euler = (1.0 + h * h) * exact_euler + h / (1.0 + grid[n]);
  }
  const double truth = problems::example2_exact_functional({}, 10.0);
  const auto errors = stats::batch_errors(mc::batch_means_squared_norm(r, 1000), truth);
  const stats::McEstimate e = stats::functional_error(errors);
  EXPECT_NEAR(truth - exact_euler, -33.80, 0.01);
  EXPECT_LT(std::abs(e.value - (truth - exact_euler)), 4.0 * e.std_error + 1e-12);
}

TEST(Ensemble, ExactSamplerErrorsShrinkWithSampleSize) {
  const SdeProblem p = problems::make_example1();
  const TimeGrid grid = TimeGrid::uniform(0.0, 2.0, 1.0 / 64);
  const auto exact = mc::exact_moment_curve(p, grid);
  std::vector<double> small(5, 0.0), large(5, 0.0);
  for (std::uint64_t seed : {1, 2, 3}) {
    for (std::size_t m : {std::size_t{256}, std::size_t{16384}}) {
      const mc::EnsembleConfig cfg{.scheme = mc::SchemeKind::exact, .samples = m, .seed = seed};
      const mc::EnsembleResult r = mc::simulate_ensemble(p, grid, cfg);
      const auto est = stats::estimate_moments(r.nodes, r.completed());
      const auto prof = stats::error_profile(est, exact);
      for (std::size_t l = 0; l < 5; ++l) (m == 256 ? small : large)[l] += prof.max[l] / 3.0;
    }
  }
  int shrinking = 0;
  for (std::size_t l = 0; l < 5; ++l) shrinking += large[l] < small[l];
  EXPECT_GE(shrinking, 4);
}

TEST(Threads, Resolution) {
  EXPECT_EQ(mc::resolve_threads(3), 3u);
  ::setenv("LLWEAK_THREADS", "5", 1);
  EXPECT_EQ(mc::resolve_threads(0), 5u);
  ::unsetenv("LLWEAK_THREADS");
  EXPECT_GE(mc::resolve_threads(0), 1u);
}

TEST(Threads, ParallelForRethrows) {
  EXPECT_THROW(mc::parallel_for(10, 2,
                                [](std::size_t i) {
                                  if (i == 7) throw std::runtime_error("boom");
                                }),
               std::runtime_error);
}

TEST(SchemeNames, RoundTrip) {
  for (auto k : {mc::SchemeKind::llweak, mc::SchemeKind::euler, mc::SchemeKind::exact}) {
    EXPECT_EQ(mc::parse_scheme_kind(mc::scheme_name(k)), k);
  }
  EXPECT_FALSE(mc::parse_scheme_kind("milstein").has_value());
}
