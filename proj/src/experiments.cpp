#include "llweak/experiments.hpp"

#include "llweak/baselines.hpp"
#include "llweak/problems.hpp"
#include "llweak/scheme.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace llweak::experiments {

using Category = ExperimentError::Category;

const char* category_name(Category c) {
  switch (c) {
    case Category::usage: return "usage";
    case Category::unsupported: return "unsupported";
    case Category::numerical: return "numerical";
    case Category::io: return "io";
    case Category::internal: return "internal";
  }
  return "internal";
}

int exit_code(Category c) {
  switch (c) {
    case Category::usage: return 2;
    case Category::unsupported: return 3;
    case Category::numerical: return 4;
    case Category::io: return 5;
    case Category::internal: return 1;
  }
  return 1;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) { throw ExperimentError(Category::usage, what); };
  if (schemes.empty()) fail("at least one scheme is required");
  for (const std::string& s : schemes) {
    if (s != "llweak" && s != "euler" && s != "euler-romberg" && s != "exact") {
      fail("unknown scheme '" + s + "'");
    }
  }
  if (deltas.empty()) fail("at least one delta is required");
  for (double d : deltas) {
    if (!(d > 0.0) || !std::isfinite(d)) fail("delta must be positive");
  }
  if (samples.empty()) fail("at least one sample size is required");
  for (std::size_t m : samples) {
    if (m < 1) fail("samples must be >= 1");
  }
  if (batches < 1) fail("batches must be >= 1");
  if (replicates < 1) fail("replicates must be >= 1");
  if (t_end && !std::isfinite(*t_end)) fail("t_end must be finite");
}

// Table and output

std::size_t Table::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::out_of_range("no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

double Table::number(std::size_t row, const std::string& name) const {
  const Cell& c = rows.at(row).at(column(name));
  if (const double* d = std::get_if<double>(&c)) return *d;
  if (const std::int64_t* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
  throw std::invalid_argument("column '" + name + "' is not numeric");
}

const std::string& Table::text(std::size_t row, const std::string& name) const {
  return std::get<std::string>(rows.at(row).at(column(name)));
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

std::string format_cell(const Cell& c) {
  if (const std::string* s = std::get_if<std::string>(&c)) return *s;
  if (const double* d = std::get_if<double>(&c)) return format_double(*d);
  return std::to_string(std::get<std::int64_t>(c));
}

}  // namespace

void write_csv(std::ostream& os, const Table& table) {
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    os << (j ? "," : "") << table.header[j];
  }
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) os << (j ? "," : "") << format_cell(row[j]);
    os << '\n';
  }
}

void write_svg_chart(std::ostream& os, const std::string& title, const std::string& x_label,
                     const std::vector<Series>& series, bool log_scale) {
  constexpr double width = 720, height = 440, left = 70, right = 170, top = 40, bottom = 50;
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  auto tx = [&](double v) { return log_scale ? std::log10(v) : v; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!log_scale || (x > 0.0 && y > 0.0));
  };

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const Series& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      xmin = std::min(xmin, tx(s.x[i]));
      xmax = std::max(xmax, tx(s.x[i]));
      ymin = std::min(ymin, tx(s.y[i]));
      ymax = std::max(ymax, tx(s.y[i]));
    }
  }
  if (!(xmin <= xmax)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const double pw = width - left - right, ph = height - top - bottom;
  auto px = [&](double x) { return left + (tx(x) - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return top + ph - (tx(y) - ymin) / (ymax - ymin) * ph; };
  auto label = [&](double v) { return format_double(log_scale ? std::pow(10.0, v) : v); };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << left << "\" y=\"24\" font-size=\"14\">" << title << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << left << "\" y=\"" << top + ph + 16 << "\">" << label(xmin) << "</text>\n";
  os << "<text x=\"" << left + pw << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"end\">"
     << label(xmax) << "</text>\n";
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">"
     << x_label << (log_scale ? " (log)" : "") << "</text>\n";
  os << "<text x=\"" << left - 4 << "\" y=\"" << top + ph << "\" text-anchor=\"end\">"
     << label(ymin) << "</text>\n";
  os << "<text x=\"" << left - 4 << "\" y=\"" << top + 10 << "\" text-anchor=\"end\">"
     << label(ymax) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const char* color = palette[k % std::size(palette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (usable(s.x[i], s.y[i])) os << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    }
    os << "\"/>\n";
    const double ly = top + 14 + 16.0 * k;
    os << "<line x1=\"" << width - right + 10 << "\" y1=\"" << ly - 4 << "\" x2=\""
       << width - right + 30 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << width - right + 36 << "\" y=\"" << ly << "\">" << s.name << "</text>\n";
  }
  os << "</svg>\n";
}

// Shared setup

namespace {

SdeProblem load_problem(const ExperimentConfig& config) {
  SdeProblem p;
  try {
    p = problems::make_problem(config.problem);
  } catch (const std::invalid_argument& e) {
    throw ExperimentError(Category::usage, e.what());
  }
  if (config.t_end) {
    if (!(*config.t_end > p.t0)) throw ExperimentError(Category::usage, "t_end must exceed t0");
    p.t_end = *config.t_end;
  }
  return p;
}

TimeGrid load_grid(const SdeProblem& p, double delta) {
  try {
    return TimeGrid::uniform(p.t0, p.t_end, delta);
  } catch (const std::invalid_argument& e) {
    throw ExperimentError(Category::usage, e.what());
  }
}

mc::SchemeKind sampled_scheme(const std::string& name) {
  const auto kind = mc::parse_scheme_kind(name);
  if (!kind) throw ExperimentError(Category::usage, "scheme '" + name + "' is not valid here");
  return *kind;
}

mc::EnsembleResult run_ensemble(const SdeProblem& p, const TimeGrid& grid,
                                const mc::EnsembleConfig& cfg) {
  try {
    return mc::simulate_ensemble(p, grid, cfg);
  } catch (const StepFailure& e) {
    throw ExperimentError(Category::numerical, e.what());
  } catch (const std::invalid_argument& e) {
    throw ExperimentError(Category::unsupported, e.what());
  }
}

std::vector<Moments> ensemble_moments(const mc::EnsembleResult& r) {
  if (r.completed() == 0) {
    throw ExperimentError(Category::numerical, "every trajectory overflowed");
  }
  return stats::estimate_moments(r.nodes, r.completed());
}

std::vector<std::string> moment_labels(int d, const std::string& prefix) {
  std::vector<std::string> out;
  for (int i = 1; i <= d; ++i) out.push_back(prefix + "m" + std::to_string(i));
  for (int j = 1; j <= d; ++j) {
    for (int i = 1; i <= d; ++i) out.push_back(prefix + "v" + std::to_string(i) + std::to_string(j));
  }
  return out;
}

void append_moments(std::vector<Cell>& row, const Moments& m) {
  for (Eigen::Index i = 0; i < m.mean.size(); ++i) row.emplace_back(m.mean[i]);
  const Vector v = linalg::vec(m.variance);
  for (Eigen::Index i = 0; i < v.size(); ++i) row.emplace_back(v[i]);
}

std::vector<double> column_values(const Table& t, const std::string& name) {
  std::vector<double> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) out.push_back(t.number(r, name));
  return out;
}

constexpr std::uint64_t kSizeStride = std::uint64_t{1} << 32;
constexpr std::uint64_t kReferenceOffset = std::uint64_t{1} << 40;

}  // namespace

// moments

Report run_moments(const ExperimentConfig& config) {
  config.validate();
  const SdeProblem p = load_problem(config);
  if (!p.exact_moments) {
    throw ExperimentError(Category::unsupported,
                          "problem '" + p.name + "' has no closed-form moments");
  }
  const TimeGrid grid = load_grid(p, config.deltas.front());
  const std::vector<Moments> exact = mc::exact_moment_curve(p, grid);

  std::vector<Moments> estimate;
  if (config.propagate) {
    if (config.schemes.front() != "llweak") {
      throw ExperimentError(Category::usage, "moment propagation is only defined for llweak");
    }
    MomentTrajectory traj;
    try {
      traj = moment_propagate(p, grid);
    } catch (const std::invalid_argument& e) {
      throw ExperimentError(Category::unsupported, e.what());
    }
    for (std::size_t n = 0; n < grid.size(); ++n) estimate.push_back(traj.at(n));
  } else {
    mc::EnsembleConfig cfg;
    cfg.scheme = sampled_scheme(config.schemes.front());
    cfg.samples = config.samples.front();
    cfg.seed = config.seed;
    cfg.threads = config.threads;
    estimate = ensemble_moments(run_ensemble(p, grid, cfg));
  }

  Report report;
  Table& t = report.table;
  t.header.push_back("t");
  for (const auto& l : moment_labels(p.dim, "exact_")) t.header.push_back(l);
  for (const auto& l : moment_labels(p.dim, "est_")) t.header.push_back(l);
  for (std::size_t n = 0; n < grid.size(); ++n) {
    std::vector<Cell> row{grid[n]};
    append_moments(row, exact[n]);
    append_moments(row, estimate[n]);
    t.rows.push_back(std::move(row));
  }
  const std::vector<double> times = grid.nodes();
  for (const std::string& l : moment_labels(p.dim, "")) {
    report.charts.push_back(Chart{"moments_" + l, l + " versus t", "t",
                                  {{"exact", times, column_values(t, "exact_" + l)},
                                   {config.propagate ? "propagated" : config.schemes.front(),
                                    times, column_values(t, "est_" + l)}},
                                  false});
  }
  return report;
}

// error-table

Report run_error_table(const ExperimentConfig& config) {
  config.validate();
  const SdeProblem p = load_problem(config);
  if (!p.exact_moments || !p.exact_sample) {
    throw ExperimentError(Category::unsupported,
                          "problem '" + p.name + "' needs closed-form moments and an exact sampler");
  }
  const mc::SchemeKind scheme = sampled_scheme(config.schemes.front());
  const TimeGrid grid = load_grid(p, config.deltas.front());
  const std::vector<Moments> exact = mc::exact_moment_curve(p, grid);
  const std::size_t sizes = config.samples.size();
  const std::size_t types = stats::error_type_labels(p.dim).size();
  const std::size_t reps = config.replicates;

  // [replicate][size]
  std::vector<std::vector<stats::ErrorProfile>> hat(reps), bar(reps);
  std::vector<std::vector<std::vector<double>>> arctan(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t k = 0; k < sizes; ++k) {
      mc::EnsembleConfig cfg;
      cfg.scheme = scheme;
      cfg.samples = config.samples[k];
      cfg.seed = config.seed + r;
      cfg.threads = config.threads;
      cfg.first_stream = k * kSizeStride;
      const mc::EnsembleResult est = run_ensemble(p, grid, cfg);
      mc::EnsembleResult ref_storage;
      const mc::EnsembleResult* ref = &est;
      if (scheme != mc::SchemeKind::exact) {
        cfg.scheme = mc::SchemeKind::exact;
        cfg.first_stream = kReferenceOffset + k * kSizeStride;
        ref_storage = run_ensemble(p, grid, cfg);
        ref = &ref_storage;
      }
      hat[r].push_back(stats::error_profile(ensemble_moments(est), exact));
      bar[r].push_back(stats::error_profile(ensemble_moments(*ref), exact));
      std::vector<double> rel;
      for (int l = 0; l < p.dim; ++l) {
        rel.push_back(stats::arctan_functional_error(ref->nodes, ref->completed(), est.nodes,
                                                     est.completed(), l));
      }
      arctan[r].push_back(std::move(rel));
    }
  }

  auto mean_spread = [&](auto&& value) {
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      const double v = value(r);
      sum += v;
      sum2 += v * v;
    }
    const double mean = sum / reps;
    const double var = reps > 1 ? std::max(0.0, (sum2 - reps * mean * mean) / (reps - 1)) : 0.0;
    return std::pair{mean, std::sqrt(var)};
  };

  Report report;
  Table& t = report.table;
  t.header = {"statistic", "label", "samples", "value", "spread"};
  const std::vector<std::string> labels = stats::error_type_labels(p.dim);
  std::vector<double> sample_sizes(config.samples.begin(), config.samples.end());
  for (const auto& [name, profiles] : {std::pair{"e_hat", &hat}, std::pair{"e_bar", &bar}}) {
    Chart chart{std::string("errors_") + name, std::string(name) + " versus M", "M", {}, true};
    for (std::size_t l = 0; l < types; ++l) {
      Series s{labels[l], sample_sizes, {}};
      for (std::size_t k = 0; k < sizes; ++k) {
        const auto [v, spread] = mean_spread([&](std::size_t r) { return (*profiles)[r][k].max[l]; });
        t.rows.push_back({std::string(name), labels[l],
                          static_cast<std::int64_t>(config.samples[k]), v, spread});
        s.y.push_back(v);
      }
      chart.series.push_back(std::move(s));
    }
    report.charts.push_back(std::move(chart));
  }
  for (int l = 0; l < p.dim; ++l) {
    for (std::size_t k = 0; k < sizes; ++k) {
      const auto [v, spread] = mean_spread([&](std::size_t r) { return arctan[r][k][l]; });
      t.rows.push_back({std::string("r"), std::to_string(l + 1),
                        static_cast<std::int64_t>(config.samples[k]), v, spread});
    }
  }
  if (sizes >= 2) {
    for (const auto& [name, profiles] :
         {std::pair{"gamma_hat", &hat}, std::pair{"gamma_bar", &bar}}) {
      for (std::size_t l = 0; l < types; ++l) {
        std::vector<stats::GammaFit> fits;
        for (std::size_t r = 0; r < reps; ++r) {
          try {
            fits.push_back(stats::fit_gamma(sample_sizes, (*profiles)[r], l));
          } catch (const std::invalid_argument& e) {
            throw ExperimentError(Category::numerical, e.what());
          }
        }
        const auto [g, g_spread] = mean_spread([&](std::size_t r) { return fits[r].mean; });
        const auto [s, s_spread] = mean_spread([&](std::size_t r) { return fits[r].std; });
        (void)g_spread;
        (void)s_spread;
        t.rows.push_back({std::string(name), labels[l], std::string("fit"), g, s});
      }
    }
  }
  return report;
}

// convergence

namespace {

struct BatchRun {
  std::vector<double> means;
  std::size_t overflowed = 0;
};

BatchRun batch_run(const SdeProblem& p, double delta, mc::SchemeKind scheme,
                   const ExperimentConfig& config) {
  const TimeGrid grid = load_grid(p, delta);
  const std::size_t m = config.samples.front();
  mc::EnsembleConfig cfg;
  cfg.scheme = scheme;
  cfg.samples = m * config.batches;
  cfg.seed = config.seed;
  cfg.threads = config.threads;
  cfg.keep_nodes = false;
  cfg.keep_terminal = true;
  const mc::EnsembleResult r = run_ensemble(p, grid, cfg);
  return BatchRun{mc::batch_means_squared_norm(r, m), r.overflowed};
}

}  // namespace

Report run_convergence(const ExperimentConfig& config) {
  config.validate();
  if (config.batches < 2) throw ExperimentError(Category::usage, "convergence needs batches >= 2");
  const SdeProblem p = load_problem(config);
  if (!p.exact_functional) {
    throw ExperimentError(Category::unsupported,
                          "problem '" + p.name + "' has no closed-form E|X_T|^2");
  }
  const double truth = p.exact_functional(p.t_end);

  Report report;
  Table& t = report.table;
  t.header = {"scheme", "delta", "samples", "batches", "error", "half_width", "std_error",
              "overflow"};
  for (const std::string& scheme : config.schemes) {
    Series series{scheme, {}, {}};
    for (double delta : config.deltas) {
      BatchRun run;
      if (scheme == "euler-romberg") {
        const BatchRun coarse = batch_run(p, delta, mc::SchemeKind::euler, config);
        const BatchRun fine = batch_run(p, delta / 2, mc::SchemeKind::euler, config);
        for (std::size_t j = 0; j < coarse.means.size(); ++j) {
          run.means.push_back(baselines::romberg_estimate({delta, coarse.means[j]},
                                                          {delta / 2, fine.means[j]})
                                  .value);
        }
        run.overflowed = coarse.overflowed + fine.overflowed;
      } else {
        run = batch_run(p, delta, sampled_scheme(scheme), config);
      }
      const stats::McEstimate e = stats::functional_error(stats::batch_errors(run.means, truth));
      t.rows.push_back({scheme, delta, static_cast<std::int64_t>(config.samples.front()),
                        static_cast<std::int64_t>(config.batches), e.value, e.half_width,
                        e.std_error, static_cast<std::int64_t>(run.overflowed)});
      series.x.push_back(delta);
      series.y.push_back(std::abs(e.value));
    }
    report.charts.push_back(Chart{"convergence_" + scheme, "|error| versus delta", "delta",
                                  {series}, true});
  }
  if (report.charts.size() > 1) {
    Chart all{"convergence", "|error| of E|X_T|^2 versus delta", "delta", {}, true};
    for (const Chart& c : report.charts) all.series.push_back(c.series.front());
    report.charts = {all};
  }
  return report;
}

// simulate

Report run_simulate(const ExperimentConfig& config) {
  config.validate();
  const SdeProblem p = load_problem(config);
  const TimeGrid grid = load_grid(p, config.deltas.front());
  mc::EnsembleConfig cfg;
  cfg.scheme = sampled_scheme(config.schemes.front());
  cfg.samples = config.samples.front();
  cfg.seed = config.seed;
  cfg.threads = config.threads;
  const mc::EnsembleResult r = run_ensemble(p, grid, cfg);
  const std::vector<Moments> est = ensemble_moments(r);

  Report report;
  Table& t = report.table;
  t.header.push_back("t");
  for (const auto& l : moment_labels(p.dim, "")) t.header.push_back(l);
  t.header.push_back("completed");
  for (std::size_t n = 0; n < grid.size(); ++n) {
    std::vector<Cell> row{grid[n]};
    append_moments(row, est[n]);
    row.emplace_back(static_cast<std::int64_t>(r.completed()));
    t.rows.push_back(std::move(row));
  }
  Chart chart{"simulate_mean", "ensemble mean versus t", "t", {}, false};
  for (int i = 1; i <= p.dim; ++i) {
    const std::string l = "m" + std::to_string(i);
    chart.series.push_back({l, grid.nodes(), column_values(t, l)});
  }
  report.charts.push_back(std::move(chart));
  return report;
}

}  // namespace llweak::experiments
