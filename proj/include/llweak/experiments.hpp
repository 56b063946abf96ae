#pragma once

#include "llweak/ensemble.hpp"
#include "llweak/statistics.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

/// Experiment drivers behind the command-line tool. Each returns a table
/// that serializes to CSV.
namespace llweak::experiments {

/// Failure with a machine-readable category for the CLI exit status.
class ExperimentError : public std::runtime_error {
 public:
  enum class Category { usage, unsupported, numerical, io, internal };

  ExperimentError(Category category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

const char* category_name(ExperimentError::Category c);
int exit_code(ExperimentError::Category c);

struct ExperimentConfig {
  std::string problem = "example1";
  /// llweak | euler | euler-romberg | exact. Only convergence uses more than one.
  std::vector<std::string> schemes{"llweak"};
  std::vector<double> deltas{1.0 / 64};
  std::optional<double> t_end;
  std::vector<std::size_t> samples{1024};
  std::size_t batches = 10;
  std::uint64_t seed = 1;
  /// Seeds seed, seed+1, ... averaged by error-table.
  std::size_t replicates = 1;
  unsigned threads = 0;
  std::string out;
  bool emit_plots = false;
  /// moments: propagate the scheme's moments exactly instead of sampling.
  bool propagate = false;

  /// Throws ExperimentError(usage) on out-of-range values.
  void validate() const;
};

using Cell = std::variant<std::string, double, std::int64_t>;

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
  const std::string& text(std::size_t row, const std::string& name) const;
};

/// Comma-separated rows with a header; doubles use 17 significant digits.
void write_csv(std::ostream& os, const Table& table);
std::string format_double(double value);

/// One line chart; log_scale applies to both axes.
struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};
void write_svg_chart(std::ostream& os, const std::string& title, const std::string& x_label,
                     const std::vector<Series>& series, bool log_scale);

struct Chart {
  std::string name;
  std::string title;
  std::string x_label;
  std::vector<Series> series;
  bool log_scale = false;
};

struct Report {
  Table table;
  std::vector<Chart> charts;
};

/// Exact and estimated mean/variance per grid node (first delta and sample
/// size of the config).
Report run_moments(const ExperimentConfig& config);

/// Max-over-grid moment errors of the scheme and of the exact sampler per
/// sample size, decay rates, and arctan functional differences.
Report run_error_table(const ExperimentConfig& config);

/// Batch-means error of E|X_T|^2 per scheme and stepsize.
Report run_convergence(const ExperimentConfig& config);

/// Ensemble mean and variance per grid node, no ground truth needed.
Report run_simulate(const ExperimentConfig& config);

}  // namespace llweak::experiments
