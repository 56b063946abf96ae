#pragma once

#include "llweak/rng.hpp"
#include "llweak/sde_model.hpp"
#include "llweak/statistics.hpp"
#include "llweak/time_grid.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

/// Trajectory ensembles for the Monte Carlo experiments.
namespace llweak::mc {

enum class SchemeKind { llweak, euler, exact };

std::optional<SchemeKind> parse_scheme_kind(std::string_view name);
std::string_view scheme_name(SchemeKind kind);

/// Worker count: `requested` if nonzero, else LLWEAK_THREADS, else the
/// hardware concurrency.
unsigned resolve_threads(unsigned requested);

/// Calls body(i) for i in [0, count) on up to `threads` workers. The first
/// exception thrown by any call is rethrown after all workers finish.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body);

struct EnsembleConfig {
  SchemeKind scheme = SchemeKind::llweak;
  std::size_t samples = 1;
  std::uint64_t seed = 0;
  /// Trajectory i draws from stream first_stream + i.
  std::uint64_t first_stream = 0;
  unsigned threads = 0;
  bool keep_nodes = true;
  bool keep_terminal = false;
};

struct EnsembleResult {
  std::size_t samples = 0;
  std::size_t overflowed = 0;
  /// Sums over non-overflowed trajectories, one entry per grid node.
  std::vector<stats::NodeSums> nodes;
  /// Terminal state per trajectory (when kept); check overflow_flags first.
  std::vector<Vector> terminal;
  std::vector<char> overflow_flags;

  std::size_t completed() const { return samples - overflowed; }
};

/// Simulates one trajectory of `scheme` into path (resized to grid.size()).
/// Returns false if the trajectory overflowed. LL step failures throw
/// StepFailure.
class TrajectorySimulator {
 public:
  TrajectorySimulator(const SdeProblem& p, const TimeGrid& grid, SchemeKind scheme);
  ~TrajectorySimulator();
  TrajectorySimulator(TrajectorySimulator&&) noexcept;

  bool run(RngStream& rng, std::vector<Vector>& path);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Simulates config.samples independent trajectories. The result is
/// bit-identical for any thread count.
EnsembleResult simulate_ensemble(const SdeProblem& p, const TimeGrid& grid,
                                 const EnsembleConfig& config);

/// Per-batch means of |z_N|^2 over consecutive batches of batch_size
/// trajectories, skipping overflowed ones. A batch with no completed
/// trajectory has mean NaN.
std::vector<double> batch_means_squared_norm(const EnsembleResult& result, std::size_t batch_size);

/// Exact moments of p along the grid. Throws if p has no closed form.
std::vector<Moments> exact_moment_curve(const SdeProblem& p, const TimeGrid& grid);

}  // namespace llweak::mc
