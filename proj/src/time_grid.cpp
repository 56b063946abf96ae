#include "llweak/time_grid.hpp"

#include <cmath>
#include <stdexcept>

namespace llweak {

TimeGrid::TimeGrid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw std::invalid_argument("TimeGrid: no nodes");
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
    if (!(nodes_[i] < nodes_[i + 1])) {
      throw std::invalid_argument("TimeGrid: nodes must be strictly increasing");
    }
  }
}

TimeGrid TimeGrid::uniform(double t0, double t_end, double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw std::invalid_argument("TimeGrid: delta must be positive");
  }
  if (!(t_end > t0)) throw std::invalid_argument("TimeGrid: requires t_end > t0");
  const double ratio = (t_end - t0) / delta;
  const double steps = std::round(ratio);
  if (std::abs(ratio - steps) > 1e-9 * std::max(1.0, steps)) {
    throw std::invalid_argument("TimeGrid: delta does not divide the interval");
  }
  std::vector<double> nodes(static_cast<std::size_t>(steps) + 1);
  for (std::size_t n = 0; n < nodes.size(); ++n) nodes[n] = t0 + static_cast<double>(n) * delta;
  nodes.back() = t_end;
  return TimeGrid(std::move(nodes));
}

}  // namespace llweak
