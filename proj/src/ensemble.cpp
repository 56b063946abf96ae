#include "llweak/ensemble.hpp"

#include "llweak/baselines.hpp"
#include "llweak/scheme.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

namespace llweak::mc {

namespace {

constexpr std::size_t kChunk = 32;
constexpr std::size_t kWave = 64;

}  // namespace

std::optional<SchemeKind> parse_scheme_kind(std::string_view name) {
  if (name == "llweak") return SchemeKind::llweak;
  if (name == "euler") return SchemeKind::euler;
  if (name == "exact") return SchemeKind::exact;
  return std::nullopt;
}

std::string_view scheme_name(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::llweak: return "llweak";
    case SchemeKind::euler: return "euler";
    case SchemeKind::exact: return "exact";
  }
  return "unknown";
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("LLWEAK_THREADS")) {
    try {
      const long value = std::stol(env);
      if (value > 0) return static_cast<unsigned>(value);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
}

// TrajectorySimulator

struct TrajectorySimulator::Impl {
  const SdeProblem& problem;
  const TimeGrid& grid;
  SchemeKind scheme;
  std::optional<LlStepper> stepper;
  Vector eta;
  Vector wiener;

  Impl(const SdeProblem& p, const TimeGrid& g, SchemeKind s) : problem(p), grid(g), scheme(s) {
    p.validate();
    if (g.front() != p.t0) throw std::invalid_argument("simulation grid must start at t0");
    switch (scheme) {
      case SchemeKind::llweak:
        stepper.emplace(p);
        eta.resize(p.dim);
        break;
      case SchemeKind::euler:
        eta.resize(p.noise_dim);
        break;
      case SchemeKind::exact:
        if (!p.exact_sample) {
          throw std::invalid_argument("problem '" + p.name + "' has no exact sampler");
        }
        wiener.resize(p.noise_dim);
        break;
    }
  }

  bool run(RngStream& rng, std::vector<Vector>& path) {
    path.resize(grid.size());
    path[0] = problem.x0;
    if (scheme == SchemeKind::exact) wiener.setZero();
    for (std::size_t n = 0; n < grid.steps(); ++n) {
      const double t = grid[n];
      const double h = grid.step(n);
      switch (scheme) {
        case SchemeKind::llweak: {
          for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = rng.two_point();
          try {
            path[n + 1] = stepper->step(t, path[n], h, eta);
          } catch (const linalg::NotPositiveSemidefinite& e) {
            throw StepFailure(n, t, e.min_eigenvalue(), e.what());
          }
          if (!path[n + 1].allFinite()) throw StepFailure(n, t, 0.0, "non-finite state");
          break;
        }
        case SchemeKind::euler:
          for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = rng.two_point();
          path[n + 1] = baselines::euler_weak_step(problem, t, path[n], h, eta);
          if (baselines::overflowed(path[n + 1])) return false;
          break;
        case SchemeKind::exact: {
          const double root_h = std::sqrt(h);
          for (Eigen::Index k = 0; k < wiener.size(); ++k) wiener[k] += root_h * rng.gaussian();
          path[n + 1] = problem.exact_sample(grid[n + 1], wiener);
          if (baselines::overflowed(path[n + 1])) return false;
          break;
        }
      }
    }
    return true;
  }
};

TrajectorySimulator::TrajectorySimulator(const SdeProblem& p, const TimeGrid& grid,
                                         SchemeKind scheme)
    : impl_(std::make_unique<Impl>(p, grid, scheme)) {}
TrajectorySimulator::~TrajectorySimulator() = default;
TrajectorySimulator::TrajectorySimulator(TrajectorySimulator&&) noexcept = default;

bool TrajectorySimulator::run(RngStream& rng, std::vector<Vector>& path) {
  return impl_->run(rng, path);
}

// Ensembles

namespace {

struct ChunkResult {
  std::vector<stats::NodeSums> nodes;
  std::size_t overflowed = 0;
};

}  // namespace

EnsembleResult simulate_ensemble(const SdeProblem& p, const TimeGrid& grid,
                                 const EnsembleConfig& config) {
  if (config.samples == 0) throw std::invalid_argument("simulate_ensemble: samples must be >= 1");
  // Validates the problem/scheme combination before spawning workers.
  { TrajectorySimulator probe(p, grid, config.scheme); }

  EnsembleResult result;
  result.samples = config.samples;
  if (config.keep_nodes) {
    result.nodes.assign(grid.size(), stats::NodeSums::zero(p.dim));
  }
  if (config.keep_terminal) {
    result.terminal.assign(config.samples, Vector());
  }
  result.overflow_flags.assign(config.samples, 0);

  const unsigned threads = resolve_threads(config.threads);
  const std::size_t chunks = (config.samples + kChunk - 1) / kChunk;
  for (std::size_t wave_start = 0; wave_start < chunks; wave_start += kWave) {
    const std::size_t wave_size = std::min(kWave, chunks - wave_start);
    std::vector<ChunkResult> partial(wave_size);
    parallel_for(wave_size, threads, [&](std::size_t w) {
      const std::size_t chunk = wave_start + w;
      const std::size_t first = chunk * kChunk;
      const std::size_t last = std::min(config.samples, first + kChunk);
      TrajectorySimulator sim(p, grid, config.scheme);
      ChunkResult& out = partial[w];
      if (config.keep_nodes) out.nodes.assign(grid.size(), stats::NodeSums::zero(p.dim));
      std::vector<Vector> path;
      for (std::size_t i = first; i < last; ++i) {
        RngStream rng(config.seed, config.first_stream + i);
        if (!sim.run(rng, path)) {
          result.overflow_flags[i] = 1;
          ++out.overflowed;
          continue;
        }
        if (config.keep_nodes) {
          for (std::size_t n = 0; n < path.size(); ++n) out.nodes[n].add(path[n]);
        }
        if (config.keep_terminal) result.terminal[i] = path.back();
      }
    });
    for (const ChunkResult& c : partial) {
      result.overflowed += c.overflowed;
      if (config.keep_nodes) {
        for (std::size_t n = 0; n < grid.size(); ++n) result.nodes[n].merge(c.nodes[n]);
      }
    }
  }
  return result;
}

std::vector<double> batch_means_squared_norm(const EnsembleResult& result,
                                             std::size_t batch_size) {
  if (batch_size == 0 || result.terminal.size() != result.samples ||
      result.samples % batch_size != 0) {
    throw std::invalid_argument("batch_means_squared_norm: samples must split into whole batches");
  }
  std::vector<double> means;
  for (std::size_t first = 0; first < result.samples; first += batch_size) {
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t i = first; i < first + batch_size; ++i) {
      if (result.overflow_flags[i]) continue;
      sum += result.terminal[i].squaredNorm();
      ++used;
    }
    means.push_back(used > 0 ? sum / used : std::numeric_limits<double>::quiet_NaN());
  }
  return means;
}

std::vector<Moments> exact_moment_curve(const SdeProblem& p, const TimeGrid& grid) {
  if (!p.exact_moments) {
    throw std::invalid_argument("problem '" + p.name + "' has no closed-form moments");
  }
  std::vector<Moments> curve;
  curve.reserve(grid.size());
  for (double t : grid.nodes()) curve.push_back(p.exact_moments(t));
  return curve;
}

}  // namespace llweak::mc
