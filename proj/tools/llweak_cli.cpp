// Command-line runner for the moment, error-table, convergence and simulate
// experiments. Results go to CSV (stdout or --out); --emit-plots adds SVG
// charts next to the CSV file.

#include "llweak/experiments.hpp"
#include "llweak/scheme.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using llweak::experiments::ExperimentConfig;
using llweak::experiments::ExperimentError;
using Category = ExperimentError::Category;
using json = nlohmann::json;

[[noreturn]] void usage_error(const std::string& message) {
  throw ExperimentError(Category::usage, message);
}

// Accepts plain numbers, fractions "1/64" and powers "2^14".
double parse_number(const std::string& text) {
  auto plain = [&](std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      usage_error("cannot parse number '" + text + "'");
    }
    return v;
  };
  if (const auto slash = text.find('/'); slash != std::string::npos) {
    return plain(std::string_view(text).substr(0, slash)) /
           plain(std::string_view(text).substr(slash + 1));
  }
  if (const auto caret = text.find('^'); caret != std::string::npos) {
    return std::pow(plain(std::string_view(text).substr(0, caret)),
                    plain(std::string_view(text).substr(caret + 1)));
  }
  return plain(text);
}

std::size_t parse_count(const std::string& text) {
  const double v = parse_number(text);
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e15) usage_error("not a count: '" + text + "'");
  return static_cast<std::size_t>(v);
}

std::vector<std::string> json_strings(const json& value) {
  std::vector<std::string> out;
  auto one = [&](const json& v) {
    if (v.is_string()) out.push_back(v.get<std::string>());
    else if (v.is_number()) out.push_back(llweak::experiments::format_double(v.get<double>()));
    else usage_error("config values must be numbers or strings");
  };
  if (value.is_array()) {
    for (const json& v : value) one(v);
  } else {
    one(value);
  }
  return out;
}

template <class T, class F>
std::vector<T> map_list(const std::vector<std::string>& items, F&& parse) {
  std::vector<T> out;
  for (const std::string& s : items) out.push_back(parse(s));
  return out;
}

void apply_config_file(const std::string& path, ExperimentConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ExperimentError(Category::io, "cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    usage_error(std::string("invalid config file: ") + e.what());
  }
  if (!doc.is_object()) usage_error("config file must hold a JSON object");
  for (const auto& [key, value] : doc.items()) {
    const auto strings = json_strings(value);
    auto single = [&]() -> const std::string& {
      if (strings.size() != 1) usage_error("config key '" + key + "' takes one value");
      return strings.front();
    };
    if (key == "problem") cfg.problem = single();
    else if (key == "scheme") cfg.schemes = strings;
    else if (key == "delta") cfg.deltas = map_list<double>(strings, parse_number);
    else if (key == "t_end") cfg.t_end = parse_number(single());
    else if (key == "samples") cfg.samples = map_list<std::size_t>(strings, parse_count);
    else if (key == "batches") cfg.batches = parse_count(single());
    else if (key == "seed") cfg.seed = parse_count(single());
    else if (key == "replicates") cfg.replicates = parse_count(single());
    else if (key == "threads") cfg.threads = static_cast<unsigned>(parse_count(single()));
    else if (key == "out") cfg.out = single();
    else if (key == "emit_plots" && value.is_boolean()) cfg.emit_plots = value.get<bool>();
    else if (key == "propagate" && value.is_boolean()) cfg.propagate = value.get<bool>();
    else usage_error("unknown or mistyped config key '" + key + "'");
  }
}

struct Flags {
  std::string config;
  std::string problem;
  std::vector<std::string> schemes, deltas, samples;
  std::string t_end, batches, seed, replicates, threads, out;
  bool emit_plots = false;
  bool propagate = false;
};

void add_common_flags(CLI::App& cmd, Flags& f) {
  cmd.add_option("--config", f.config, "JSON file with any of the flag values");
  cmd.add_option("--problem", f.problem, "example1 | example2 | gbm | scalar-stability");
  cmd.add_option("--scheme", f.schemes, "llweak | euler | euler-romberg | exact (list)")
      ->delimiter(',');
  cmd.add_option("--delta", f.deltas, "stepsize or list, e.g. 1/64 or 1,0.5")->delimiter(',');
  cmd.add_option("--t-end", f.t_end, "final time (defaults to the problem's)");
  cmd.add_option("--samples", f.samples, "trajectories M, or a list, e.g. 2^8,2^10")
      ->delimiter(',');
  cmd.add_option("--batches", f.batches, "number of batches K");
  cmd.add_option("--seed", f.seed, "master seed");
  cmd.add_option("--replicates", f.replicates, "seeds averaged by error-table");
  cmd.add_option("--threads", f.threads, "worker threads (default: LLWEAK_THREADS or all cores)");
  cmd.add_option("--out", f.out, "CSV output path (default: stdout)");
  cmd.add_flag("--emit-plots", f.emit_plots, "write SVG charts next to --out");
}

ExperimentConfig build_config(const CLI::App& cmd, const Flags& f) {
  ExperimentConfig cfg;
  if (!f.config.empty()) apply_config_file(f.config, cfg);
  if (cmd.count("--problem")) cfg.problem = f.problem;
  if (cmd.count("--scheme")) cfg.schemes = f.schemes;
  if (cmd.count("--delta")) cfg.deltas = map_list<double>(f.deltas, parse_number);
  if (cmd.count("--t-end")) cfg.t_end = parse_number(f.t_end);
  if (cmd.count("--samples")) cfg.samples = map_list<std::size_t>(f.samples, parse_count);
  if (cmd.count("--batches")) cfg.batches = parse_count(f.batches);
  if (cmd.count("--seed")) cfg.seed = parse_count(f.seed);
  if (cmd.count("--replicates")) cfg.replicates = parse_count(f.replicates);
  if (cmd.count("--threads")) cfg.threads = static_cast<unsigned>(parse_count(f.threads));
  if (cmd.count("--out")) cfg.out = f.out;
  if (cmd.count("--emit-plots")) cfg.emit_plots = f.emit_plots;
  if (cmd.get_option_no_throw("--propagate") && cmd.count("--propagate")) {
    cfg.propagate = f.propagate;
  }
  return cfg;
}

void write_report(const ExperimentConfig& cfg, const llweak::experiments::Report& report) {
  if (cfg.emit_plots && cfg.out.empty()) usage_error("--emit-plots requires --out");
  if (cfg.out.empty()) {
    llweak::experiments::write_csv(std::cout, report.table);
  } else {
    std::ofstream os(cfg.out);
    if (!os) throw ExperimentError(Category::io, "cannot write '" + cfg.out + "'");
    llweak::experiments::write_csv(os, report.table);
    if (!os) throw ExperimentError(Category::io, "error writing '" + cfg.out + "'");
  }
  if (!cfg.emit_plots) return;
  const std::filesystem::path base(cfg.out);
  for (const auto& chart : report.charts) {
    std::filesystem::path svg = base;
    svg.replace_filename(base.stem().string() + "_" + chart.name + ".svg");
    std::ofstream os(svg);
    if (!os) throw ExperimentError(Category::io, "cannot write '" + svg.string() + "'");
    llweak::experiments::write_svg_chart(os, chart.title, chart.x_label, chart.series,
                                         chart.log_scale);
  }
}

int report_error(Category category, const std::string& message) {
  std::cerr << json{{"error", {{"category", llweak::experiments::category_name(category)},
                               {"message", message}}}}
                   .dump()
            << '\n';
  return llweak::experiments::exit_code(category);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weak local linearization experiments"};
  app.require_subcommand(1);

  Flags flags;
  struct Command {
    CLI::App* app;
    llweak::experiments::Report (*run)(const ExperimentConfig&);
  };
  std::vector<Command> commands{
      {app.add_subcommand("moments", "exact versus estimated moments per grid node"),
       llweak::experiments::run_moments},
      {app.add_subcommand("error-table", "moment errors versus number of trajectories"),
       llweak::experiments::run_error_table},
      {app.add_subcommand("convergence", "error of E|X_T|^2 versus stepsize"),
       llweak::experiments::run_convergence},
      {app.add_subcommand("simulate", "ensemble mean and variance per grid node"),
       llweak::experiments::run_simulate},
  };
  for (auto& c : commands) add_common_flags(*c.app, flags);
  commands[0].app->add_flag("--propagate", flags.propagate,
                            "propagate the scheme's moments exactly (linear problems)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(Category::usage, e.what());
  }

  try {
    for (const auto& c : commands) {
      if (!c.app->parsed()) continue;
      const ExperimentConfig cfg = build_config(*c.app, flags);
      write_report(cfg, c.run(cfg));
    }
  } catch (const ExperimentError& e) {
    return report_error(e.category(), e.what());
  } catch (const llweak::StepFailure& e) {
    return report_error(Category::numerical, e.what());
  } catch (const std::exception& e) {
    return report_error(Category::internal, e.what());
  }
  return 0;
}
