#pragma once

#include <cstddef>
#include <vector>

namespace llweak {

/// Strictly increasing discretization tau_0 < tau_1 < ... < tau_N.
class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> nodes);

  /// tau_n = t0 + n * delta for n = 0..round((t_end - t0) / delta).
  /// Throws if (t_end - t0) / delta is not an integer to within 1e-9.
  static TimeGrid uniform(double t0, double t_end, double delta);

  std::size_t steps() const { return nodes_.size() - 1; }
  std::size_t size() const { return nodes_.size(); }
  double operator[](std::size_t n) const { return nodes_[n]; }
  double step(std::size_t n) const { return nodes_[n + 1] - nodes_[n]; }
  double front() const { return nodes_.front(); }
  double back() const { return nodes_.back(); }
  const std::vector<double>& nodes() const { return nodes_; }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  std::vector<double> nodes_;
};

}  // namespace llweak
