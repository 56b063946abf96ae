#include "llweak/statistics.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace llweak::stats {

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("student_t_cdf: df must be positive");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double x = df / (df + t * t);
  const double tail = 0.5 * boost::math::ibeta(0.5 * df, 0.5, x);
  return t >= 0.0 ? 1.0 - tail : tail;
}

double student_t_quantile(double p, double df) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("student_t_quantile: p must be in (0,1)");
  if (p == 0.5) return 0.0;
  if (p < 0.5) return -student_t_quantile(1.0 - p, df);
  double lo = 0.0;
  double hi = 1.0;
  while (student_t_cdf(hi, df) < p) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw std::domain_error("student_t_quantile: bracket failed");
  }
  for (int i = 0; i < 200 && hi - lo > 1e-14 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (student_t_cdf(mid, df) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Moments estimate_moments(std::span<const Vector> samples) {
  if (samples.empty()) throw std::invalid_argument("estimate_moments: empty ensemble");
  NodeSums sums = NodeSums::zero(static_cast<int>(samples.front().size()));
  for (const Vector& z : samples) sums.add(z);
  return estimate_moments(std::span<const NodeSums>(&sums, 1), samples.size()).front();
}

NodeSums NodeSums::zero(int d) {
  return NodeSums{Vector::Zero(d), Matrix::Zero(d, d), Vector::Zero(d)};
}

void NodeSums::add(const Vector& z) {
  sum += z;
  sum_outer.noalias() += z * z.transpose();
  for (Eigen::Index l = 0; l < z.size(); ++l) sum_arctan[l] += std::atan(1.0 + z[l] * z[l]);
}

void NodeSums::merge(const NodeSums& other) {
  sum += other.sum;
  sum_outer += other.sum_outer;
  sum_arctan += other.sum_arctan;
}

std::vector<Moments> estimate_moments(std::span<const NodeSums> nodes, std::size_t count) {
  if (count == 0) throw std::invalid_argument("estimate_moments: empty ensemble");
  const double inv = 1.0 / static_cast<double>(count);
  std::vector<Moments> out;
  out.reserve(nodes.size());
  for (const NodeSums& s : nodes) {
    out.push_back(Moments::from_second_moment(s.sum * inv, s.sum_outer * inv));
  }
  return out;
}

ErrorProfile error_profile(std::span<const Moments> estimate, std::span<const Moments> exact) {
  if (estimate.size() != exact.size() || estimate.empty()) {
    throw std::invalid_argument("error_profile: grid mismatch");
  }
  const Eigen::Index d = exact.front().mean.size();
  const std::size_t types = static_cast<std::size_t>(2 * d + d * (d - 1) / 2);
  ErrorProfile prof;
  prof.per_node.assign(types, std::vector<double>(exact.size()));
  for (std::size_t n = 0; n < exact.size(); ++n) {
    const Moments& e = estimate[n];
    const Moments& x = exact[n];
    if (e.mean.size() != d || x.mean.size() != d) {
      throw std::invalid_argument("error_profile: dimension mismatch");
    }
    std::size_t t = 0;
    for (Eigen::Index i = 0; i < d; ++i) prof.per_node[t++][n] = std::abs(x.mean[i] - e.mean[i]);
    for (Eigen::Index i = 0; i < d; ++i) {
      prof.per_node[t++][n] = std::abs(x.variance(i, i) - e.variance(i, i));
    }
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = i + 1; j < d; ++j) {
        prof.per_node[t++][n] = std::abs(x.variance(i, j) - e.variance(i, j));
      }
    }
  }
  prof.max.reserve(types);
  for (const auto& row : prof.per_node) prof.max.push_back(*std::max_element(row.begin(), row.end()));
  return prof;
}

std::vector<std::string> error_type_labels(int d) {
  std::vector<std::string> labels;
  for (int i = 1; i <= d; ++i) labels.push_back("m" + std::to_string(i));
  for (int i = 1; i <= d; ++i) labels.push_back("v" + std::to_string(i) + std::to_string(i));
  for (int i = 1; i <= d; ++i) {
    for (int j = i + 1; j <= d; ++j) labels.push_back("v" + std::to_string(i) + std::to_string(j));
  }
  return labels;
}

double fit_slope(std::span<const double> samples, std::span<const double> errors) {
  if (samples.size() != errors.size()) throw std::invalid_argument("fit_slope: size mismatch");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!(errors[i] > 0.0)) continue;
    const double x = std::log2(samples[i]);
    const double y = std::log2(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) throw std::invalid_argument("fit_slope: fewer than 2 usable points");
  const double nn = static_cast<double>(n);
  const double denom = nn * sxx - sx * sx;
  if (denom == 0.0) throw std::invalid_argument("fit_slope: sample sizes are all equal");
  return -(nn * sxy - sx * sy) / denom;
}

GammaFit fit_gamma(std::span<const double> samples, std::span<const ErrorProfile> profiles,
                   std::size_t type) {
  if (samples.size() != profiles.size() || samples.size() < 2) {
    throw std::invalid_argument("fit_gamma: need at least 2 sample sizes, one profile each");
  }
  const std::size_t nodes = profiles.front().per_node.at(type).size();
  GammaFit fit;
  std::vector<double> gammas;
  std::vector<double> errors(samples.size());
  for (std::size_t n = 0; n < nodes; ++n) {
    std::size_t usable = 0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
      errors[k] = profiles[k].per_node.at(type).at(n);
      if (errors[k] > 0.0) ++usable;
    }
    fit.points_excluded += samples.size() - usable;
    if (usable < 2) continue;
    gammas.push_back(fit_slope(samples, errors));
  }
  if (gammas.empty()) throw std::invalid_argument("fit_gamma: no node has 2 usable points");
  fit.nodes_used = gammas.size();
  fit.mean = std::accumulate(gammas.begin(), gammas.end(), 0.0) / gammas.size();
  if (gammas.size() > 1) {
    double ss = 0.0;
    for (double g : gammas) ss += (g - fit.mean) * (g - fit.mean);
    fit.std = std::sqrt(ss / (gammas.size() - 1));
  }
  return fit;
}

McEstimate functional_error(std::span<const double> batch_errors, double alpha) {
  const std::size_t k = batch_errors.size();
  if (k < 2) throw std::invalid_argument("functional_error: need at least 2 batches");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("functional_error: bad alpha");
  McEstimate est;
  est.batches = k;
  est.value = std::accumulate(batch_errors.begin(), batch_errors.end(), 0.0) / k;
  double ss = 0.0;
  for (double e : batch_errors) ss += (e - est.value) * (e - est.value);
  const double var = ss / (k - 1);
  est.std_error = var > 0.0 ? std::sqrt(var / k) : 0.0;
  est.half_width =
      est.std_error > 0.0 ? student_t_quantile(1.0 - 0.5 * alpha, k - 1.0) * est.std_error : 0.0;
  return est;
}

std::vector<double> batch_errors(std::span<const double> batch_means, double exact) {
  std::vector<double> out;
  out.reserve(batch_means.size());
  for (double m : batch_means) out.push_back(exact - m);
  return out;
}

double arctan_functional_error(std::span<const NodeSums> reference, std::size_t reference_count,
                               std::span<const NodeSums> scheme, std::size_t scheme_count,
                               int component) {
  if (reference.size() != scheme.size() || reference.empty()) {
    throw std::invalid_argument("arctan_functional_error: grid mismatch");
  }
  if (reference_count == 0 || scheme_count == 0) {
    throw std::invalid_argument("arctan_functional_error: empty ensemble");
  }
  double worst = 0.0;
  for (std::size_t n = 0; n < reference.size(); ++n) {
    const double ref = reference[n].sum_arctan[component] / reference_count;
    const double est = scheme[n].sum_arctan[component] / scheme_count;
    worst = std::max(worst, std::abs((ref - est) / ref));
  }
  return worst;
}

}  // namespace llweak::stats
