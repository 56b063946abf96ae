#pragma once

#include "llweak/sde_model.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace llweak::stats {

/// Student t cumulative distribution function with df degrees of freedom.
double student_t_cdf(double t, double df);

/// Quantile of the Student t distribution by bisection on its CDF.
double student_t_quantile(double p, double df);

/// Sample mean and (biased, 1/M) sample variance of a set of states.
Moments estimate_moments(std::span<const Vector> samples);

/// Per-node sums accumulated over an ensemble.
struct NodeSums {
  Vector sum;         ///< sum of z
  Matrix sum_outer;   ///< sum of z z^T
  Vector sum_arctan;  ///< sum of arctan(1 + z_l^2), per component l

  static NodeSums zero(int d);
  void add(const Vector& z);
  void merge(const NodeSums& other);
};

/// Mean and variance per node from sums over `count` samples.
std::vector<Moments> estimate_moments(std::span<const NodeSums> nodes, std::size_t count);

/// Absolute errors of estimated against exact moments along a grid.
///
/// Error types are ordered: mean components 1..d, variance diagonal
/// (1,1)..(d,d), then off-diagonal variance entries (i,j), i<j. For d = 2
/// that is m1, m2, v11, v22, v12.
struct ErrorProfile {
  std::vector<std::vector<double>> per_node;  ///< [type][node]
  std::vector<double> max;                    ///< max over nodes, per type

  std::size_t types() const { return max.size(); }
};

ErrorProfile error_profile(std::span<const Moments> estimate, std::span<const Moments> exact);

/// Labels matching ErrorProfile's type order, e.g. "m1", "v12".
std::vector<std::string> error_type_labels(int d);

/// Minus the least-squares slope of log2(error) against log2(samples).
/// Non-positive errors are skipped. Throws if fewer than 2 usable points.
double fit_slope(std::span<const double> samples, std::span<const double> errors);

struct GammaFit {
  double mean = 0.0;
  double std = 0.0;
  std::size_t nodes_used = 0;
  std::size_t points_excluded = 0;  ///< zero errors left out of the per-node fits
};

/// Per-node decay rates of error type `type` across sample sizes, averaged
/// over nodes. Nodes with fewer than two positive errors are skipped.
GammaFit fit_gamma(std::span<const double> samples, std::span<const ErrorProfile> profiles,
                   std::size_t type);

/// Batch-means estimate of a functional error with a Student t interval.
struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  double half_width = 0.0;
  std::size_t batches = 0;
  std::size_t batch_size = 0;
  std::size_t overflow_count = 0;
};

/// Mean of the per-batch errors with a two-sided 100(1-alpha)% half-width
/// t_{1-alpha/2, K-1} sqrt(var/K). Throws if fewer than two batches.
McEstimate functional_error(std::span<const double> batch_errors, double alpha = 0.10);

/// Per-batch errors E phi(X_T) - mean of phi over the batch.
std::vector<double> batch_errors(std::span<const double> batch_means, double exact);

/// max_n |(hbar_n - hhat_n) / hbar_n| where h = mean of arctan(1 + z_l^2).
double arctan_functional_error(std::span<const NodeSums> reference, std::size_t reference_count,
                               std::span<const NodeSums> scheme, std::size_t scheme_count,
                               int component);

}  // namespace llweak::stats
