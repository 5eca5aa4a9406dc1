#include "parkcast/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <ostream>
#include <set>
#include <utility>

#include "parkcast/data.hpp"
#include "parkcast/error.hpp"
#include "parkcast/io.hpp"

namespace parkcast::cli {

namespace {

std::string trimmed(const std::string &s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos)
    return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string &value,
                                    const std::string &key) {
  std::vector<std::string> items;
  std::size_t start = 0;
  while (start <= value.size()) {
    const std::size_t comma = value.find(',', start);
    const std::string item = trimmed(
        comma == std::string::npos ? value.substr(start)
                                   : value.substr(start, comma - start));
    if (item.empty())
      throw ConfigError(key + ": empty list entry");
    items.push_back(item);
    if (comma == std::string::npos)
      break;
    start = comma + 1;
  }
  return items;
}

template <typename T> std::string join_list(const std::vector<T> &items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i)
      out += ',';
    if constexpr (std::is_same_v<T, int>)
      out += std::to_string(items[i]);
    else
      out += to_string(items[i]);
  }
  return out;
}

int parse_count(const std::string &value, const std::string &key) {
  return static_cast<int>(io::parse_int(value, key));
}

bool parse_bool(const std::string &value, const std::string &key) {
  if (value == "1" || value == "true")
    return true;
  if (value == "0" || value == "false")
    return false;
  throw ConfigError(key + ": expected a boolean, got '" + value + "'");
}

} // namespace

void validate(const ExperimentConfig &config) {
  if (config.interval_min <= 0)
    throw ConfigError("interval_min must be positive");
  if (!(config.split_ratio > 0.0 && config.split_ratio < 1.0))
    throw ConfigError("split_ratio must lie strictly between 0 and 1");
  if (config.fit_fraction < 0.0 || config.fit_fraction > 1.0)
    throw ConfigError("fit_fraction must lie in [0, 1] (0 follows "
                      "split_ratio)");
  if (config.epsilon_km < 0.0)
    throw ConfigError("epsilon_km must be nonnegative");
  if (config.radius_km <= 0.0)
    throw ConfigError("radius_km must be positive");
  if (config.repeats < 1)
    throw ConfigError("repeats must be at least 1");

  if (config.archs.empty())
    throw ConfigError("archs: at least one model is required");
  std::set<std::string> arch_names;
  for (const model::Arch arch : config.archs)
    if (!arch_names.insert(model::to_string(arch)).second)
      throw ConfigError("archs: duplicate entry '" + model::to_string(arch) +
                        "'");

  if (config.methods.empty())
    throw ConfigError("methods: at least one method is required");
  std::set<std::string> method_names;
  for (const forecast::Method method : config.methods)
    if (!method_names.insert(forecast::to_string(method)).second)
      throw ConfigError("methods: duplicate entry '" +
                        forecast::to_string(method) + "'");

  if (config.horizons_min.empty())
    throw ConfigError("horizons_min: at least one horizon is required");
  std::set<int> horizon_set;
  for (const int h_min : config.horizons_min) {
    if (h_min <= 0)
      throw ConfigError("horizons_min: horizon " + std::to_string(h_min) +
                        " must be positive");
    if (h_min % config.interval_min != 0)
      throw ConfigError("horizons_min: horizon " + std::to_string(h_min) +
                        " min is not divisible by the " +
                        std::to_string(config.interval_min) +
                        "-min interval");
    if (!horizon_set.insert(h_min).second)
      throw ConfigError("horizons_min: duplicate horizon " +
                        std::to_string(h_min));
  }

  train::validate(config.base);
}

std::string format_experiment_config(const ExperimentConfig &config) {
  std::string out =
      "# Forecasting experiment configuration: key=value pairs, one per\n"
      "# line; lines starting with # are ignored. Horizons are minutes and\n"
      "# must be divisible by interval_min; repeat r trains with seed\n"
      "# seed_base + r.\n";
  auto kv = [&out](const char *key, const std::string &value) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  };
  out += "\n# inputs\n";
  kv("series_csv", config.series_csv);
  kv("coords_csv", config.coords_csv);
  kv("out_dir", config.out_dir);
  kv("capacity_csv", config.capacity_csv);
  out += "\n# graph\n";
  kv("epsilon_km", io::fmt_double(config.epsilon_km));
  kv("radius_km", io::fmt_double(config.radius_km));
  kv("weight_mode", geo::to_string(config.weight_mode));
  out += "\n# data\n";
  kv("interval_min", std::to_string(config.interval_min));
  kv("split_ratio", io::fmt_double(config.split_ratio));
  kv("fit_fraction", io::fmt_double(config.fit_fraction));
  out += "\n# training\n";
  kv("archs", join_list(config.archs));
  kv("epochs", std::to_string(config.base.epochs));
  kv("batch_size", std::to_string(config.base.batch_size));
  kv("learning_rate", io::fmt_double(config.base.learning_rate));
  kv("m", std::to_string(config.base.m));
  kv("hidden", std::to_string(config.base.hidden));
  kv("gcn_hidden", std::to_string(config.base.gcn_hidden));
  kv("gcn_depth", std::to_string(config.base.gcn_depth));
  kv("candidate_bias", config.base.candidate_bias ? "1" : "0");
  kv("grad_clip", config.base.grad_clip ? "1" : "0");
  kv("divergence_limit", io::fmt_double(config.base.divergence_limit));
  out += "\n# evaluation\n";
  kv("horizons_min", join_list(config.horizons_min));
  kv("methods", join_list(config.methods));
  kv("repeats", std::to_string(config.repeats));
  kv("seed_base", std::to_string(config.seed_base));
  return out;
}

ExperimentConfig parse_experiment_config(const std::string &text) {
  ExperimentConfig config;
  for (const std::string &raw : io::split_lines(text)) {
    const std::string line = trimmed(raw);
    if (line.empty() || line[0] == '#')
      continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key=value, got '" + line + "'");
    const std::string key = trimmed(line.substr(0, eq));
    const std::string value = trimmed(line.substr(eq + 1));
    if (key == "series_csv")
      config.series_csv = value;
    else if (key == "coords_csv")
      config.coords_csv = value;
    else if (key == "out_dir")
      config.out_dir = value;
    else if (key == "capacity_csv")
      config.capacity_csv = value;
    else if (key == "epsilon_km")
      config.epsilon_km = io::parse_double(value, key);
    else if (key == "radius_km")
      config.radius_km = io::parse_double(value, key);
    else if (key == "weight_mode")
      config.weight_mode = geo::weight_mode_from_string(value);
    else if (key == "interval_min")
      config.interval_min = parse_count(value, key);
    else if (key == "split_ratio")
      config.split_ratio = io::parse_double(value, key);
    else if (key == "fit_fraction")
      config.fit_fraction = io::parse_double(value, key);
    else if (key == "archs") {
      config.archs.clear();
      for (const std::string &name : split_list(value, key))
        config.archs.push_back(model::arch_from_string(name));
    } else if (key == "epochs")
      config.base.epochs = parse_count(value, key);
    else if (key == "batch_size")
      config.base.batch_size = parse_count(value, key);
    else if (key == "learning_rate")
      config.base.learning_rate = io::parse_double(value, key);
    else if (key == "m")
      config.base.m = parse_count(value, key);
    else if (key == "hidden")
      config.base.hidden = parse_count(value, key);
    else if (key == "gcn_hidden")
      config.base.gcn_hidden = parse_count(value, key);
    else if (key == "gcn_depth")
      config.base.gcn_depth = parse_count(value, key);
    else if (key == "candidate_bias")
      config.base.candidate_bias = parse_bool(value, key);
    else if (key == "grad_clip")
      config.base.grad_clip = parse_bool(value, key);
    else if (key == "divergence_limit")
      config.base.divergence_limit = io::parse_double(value, key);
    else if (key == "horizons_min") {
      config.horizons_min.clear();
      for (const std::string &item : split_list(value, key))
        config.horizons_min.push_back(parse_count(item, key));
    } else if (key == "methods") {
      config.methods.clear();
      for (const std::string &name : split_list(value, key))
        config.methods.push_back(forecast::method_from_string(name));
    } else if (key == "repeats")
      config.repeats = parse_count(value, key);
    else if (key == "seed_base")
      config.seed_base = static_cast<std::uint64_t>(io::parse_int(value, key));
    else
      throw ConfigError("unknown config key '" + key + "'");
  }
  validate(config);
  return config;
}

std::string resolve_out_dir(const std::string &flag_value,
                            const std::string &config_value) {
  if (!flag_value.empty())
    return flag_value;
  if (const char *env = std::getenv("PARKCAST_OUT_DIR"); env && *env)
    return env;
  return config_value.empty() ? "out" : config_value;
}

std::string checkpoint_name(model::Arch arch, int h_steps, int repeat) {
  return "ckpt_" + model::to_string(arch) + "_h" + std::to_string(h_steps) +
         "_r" + std::to_string(repeat) + ".bin";
}

std::string history_name(model::Arch arch, int h_steps, int repeat) {
  return "history_" + model::to_string(arch) + "_h" +
         std::to_string(h_steps) + "_r" + std::to_string(repeat) + ".csv";
}

std::string report_name(model::Arch arch) {
  return "report_" + model::to_string(arch) + ".csv";
}

std::string trace_name(model::Arch arch, forecast::Method method,
                       int horizon_min) {
  return "trace_" + model::to_string(arch) + "_" +
         forecast::to_string(method) + "_" + std::to_string(horizon_min) +
         "min.csv";
}

namespace {

std::string joined(const std::string &dir, const std::string &name) {
  return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string &dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw IoError("cannot create output directory " + dir + ": " +
                  ec.message());
}

/// Everything a command needs about the configured experiment's inputs.
struct ExperimentData {
  geo::ParkingGraph graph;
  data::TimeSeriesPanel panel; // raw counts, columns in graph node order
  std::uint64_t fingerprint = 0;
};

ExperimentData load_experiment(const ExperimentConfig &config,
                               std::ostream &err) {
  if (config.series_csv.empty())
    throw ConfigError("series_csv is required");
  if (config.coords_csv.empty())
    throw ConfigError("coords_csv is required");
  ExperimentData exp;
  exp.graph = geo::build_graph(geo::load_sites_csv(config.coords_csv),
                               config.epsilon_km, config.radius_km,
                               config.weight_mode);
  std::vector<std::string> order;
  order.reserve(exp.graph.size());
  for (const geo::GeoPoint &node : exp.graph.nodes)
    order.push_back(node.site_id);
  std::vector<std::string> warnings;
  exp.panel =
      data::load_series(config.series_csv, config.interval_min, order,
                        &warnings);
  for (const std::string &w : warnings)
    err << "warning: " << w << "\n";
  exp.fingerprint = io::fnv1a64(io::read_file(config.series_csv));
  return exp;
}

/// Horizon steps to train, in run order: the configured horizons plus a
/// one-step model when iterative prediction needs one.
std::vector<int> horizon_steps_to_train(const ExperimentConfig &config,
                                        bool *added_unit) {
  std::vector<int> steps;
  for (const int h_min : config.horizons_min)
    steps.push_back(h_min / config.interval_min);
  const bool wants_iterative =
      std::find(config.methods.begin(), config.methods.end(),
                forecast::Method::Iterative) != config.methods.end();
  const bool has_unit =
      std::find(steps.begin(), steps.end(), 1) != steps.end();
  if (added_unit)
    *added_unit = wants_iterative && !has_unit;
  if (wants_iterative && !has_unit)
    steps.insert(steps.begin(), 1);
  return steps;
}

std::string history_csv(const std::vector<train::EpochStats> &history) {
  std::string out = "epoch,train_mse,val_mse\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    out += std::to_string(i + 1);
    out += ',';
    out += io::fmt_double(history[i].train_mse);
    out += ',';
    out += std::isnan(history[i].val_mse) ? "nan"
                                          : io::fmt_double(history[i].val_mse);
    out += '\n';
  }
  return out;
}

double elapsed_s(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       since)
      .count();
}

} // namespace

int cmd_graph(const GraphArgs &args, std::ostream &out, std::ostream &err) {
  try {
    const geo::WeightMode mode =
        geo::weight_mode_from_string(args.weight_mode);
    const geo::ParkingGraph graph = geo::build_graph(
        geo::load_sites_csv(args.coords_csv), args.epsilon_km,
        args.radius_km, mode);

    const std::size_t n = graph.size();
    std::size_t edges = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (graph.A.at(i, j) != 0.0)
          ++edges;

    const std::string dir = resolve_out_dir(args.out_dir, "");
    ensure_dir(dir);
    const std::string a_path = joined(dir, "adjacency.csv");
    const std::string a_hat_path = joined(dir, "adjacency_normalized.csv");
    geo::save_graph_csv(graph, a_path, a_hat_path);

    out << "graph: " << n << " sites, " << edges << " edges (epsilon "
        << io::fmt_double(graph.epsilon_km) << " km, "
        << geo::to_string(mode) << " weights)\n";
    if (n >= 2) {
      double dmin = 0.0, dmax = 0.0;
      bool first = true;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
          const double d = geo::haversine_distance(
              graph.nodes[i], graph.nodes[j], graph.radius_km);
          dmin = first ? d : std::min(dmin, d);
          dmax = first ? d : std::max(dmax, d);
          first = false;
        }
      out << "pairwise distance: min " << io::fmt_double(dmin) << " km, max "
          << io::fmt_double(dmax) << " km\n";
    }
    if (edges == 0)
      err << "warning: graph has no edges\n";
    out << "wrote " << a_path << "\n";
    out << "wrote " << a_hat_path << "\n";
    return 0;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_train(const TrainArgs &args, std::ostream &out, std::ostream &err) {
  try {
    const ExperimentConfig config =
        parse_experiment_config(io::read_file(args.config_path));
    const std::string dir = resolve_out_dir(args.out_dir, config.out_dir);
    ensure_dir(dir);
    const ExperimentData exp = load_experiment(config, err);

    const data::TimeSeriesPanel scaled =
        data::minmax_normalize(exp.panel, config.scaler_fit_fraction());

    train::DataContext ctx;
    ctx.a_hat = exp.graph.A_hat;
    ctx.site_order = exp.panel.site_order;
    ctx.scaler = scaled.scaler;
    ctx.interval_min = exp.panel.interval_min;
    ctx.data_fingerprint = exp.fingerprint;

    bool added_unit = false;
    const std::vector<int> h_steps = horizon_steps_to_train(config,
                                                            &added_unit);
    if (added_unit)
      out << "note: training a one-step model for iterative prediction\n";

    for (const int h : h_steps) {
      const data::WindowedDataset full = data::sliding_windows(
          scaled, static_cast<std::size_t>(config.base.m),
          static_cast<std::size_t>(h));
      const auto split = data::train_test_split(full, config.split_ratio);
      for (const model::Arch arch : config.archs) {
        for (int r = 0; r < config.repeats; ++r) {
          const std::string name = checkpoint_name(arch, h, r);
          const std::string path = joined(dir, name);
          if (!args.force && std::filesystem::exists(path)) {
            out << "skip " << name << " (exists; use --force to retrain)\n";
            continue;
          }
          train::TrainConfig cell = config.base;
          cell.arch = arch;
          cell.h = h;
          cell.seed = config.seed_base + static_cast<std::uint64_t>(r);

          const auto t0 = std::chrono::steady_clock::now();
          const train::Checkpoint ckpt =
              train::train(cell, split.first, nullptr, ctx);
          train::save_checkpoint(ckpt, path);
          io::write_file_atomic(joined(dir, history_name(arch, h, r)),
                                history_csv(ckpt.history));
          out << "trained " << name << ": " << cell.epochs
              << " epochs, final train mse "
              << io::fmt_double(ckpt.history.back().train_mse) << " ("
              << io::fmt_double(elapsed_s(t0)) << " s)\n";
        }
      }
    }
    return 0;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

namespace {

/// Loads a checkpoint and verifies it belongs to the configured data.
train::Checkpoint load_compatible_checkpoint(const std::string &path,
                                             const ExperimentData &exp,
                                             bool strict) {
  train::Checkpoint ckpt = train::load_checkpoint(path);
  if (ckpt.site_order != exp.panel.site_order)
    throw ValidationError(path + ": checkpoint sites do not match the "
                                 "configured series");
  if (ckpt.interval_min != exp.panel.interval_min)
    throw ValidationError(path + ": checkpoint interval " +
                          std::to_string(ckpt.interval_min) +
                          " min does not match the series interval " +
                          std::to_string(exp.panel.interval_min) + " min");
  if (strict && ckpt.data_fingerprint != exp.fingerprint)
    throw ValidationError(path + ": checkpoint was trained on different "
                                 "data (fingerprint mismatch); pass "
                                 "--no-strict to evaluate anyway");
  return ckpt;
}

/// Predictions and aligned actuals for one (checkpoint, horizon, method)
/// cell on the held-out test split, in original count units.
struct CellEval {
  ad::Tensor pred_counts;   // K x N
  ad::Tensor actual_counts; // K x N
  std::vector<std::size_t> target_rows; // panel row of each test sample
};

CellEval evaluate_cell(const train::Checkpoint &ckpt,
                       const ExperimentData &exp, double split_ratio,
                       int h_steps, forecast::Method method) {
  const data::TimeSeriesPanel scaled =
      ckpt.scaler ? data::normalize_with(exp.panel, *ckpt.scaler)
                  : exp.panel;
  const data::WindowedDataset full = data::sliding_windows(
      scaled, static_cast<std::size_t>(ckpt.config.m),
      static_cast<std::size_t>(h_steps));
  const auto split = data::train_test_split(full, split_ratio);
  const data::WindowedDataset &test = split.second;
  const std::size_t n_train = split.first.samples();

  const ad::Tensor pred_norm = forecast::batch_forecast(ckpt, test, method);
  const std::size_t k = pred_norm.shape().rows();
  const std::size_t n = pred_norm.shape().cols();

  CellEval cell;
  cell.pred_counts = ad::Tensor(ad::Shape::mat(k, n));
  cell.actual_counts = ad::Tensor(ad::Shape::mat(k, n));
  cell.target_rows.resize(k);
  for (std::size_t t = 0; t < k; ++t) {
    ad::Tensor row(ad::Shape::mat(1, n));
    for (std::size_t j = 0; j < n; ++j)
      row.at(0, j) = pred_norm.at(t, j);
    const ad::Tensor counts =
        ckpt.scaler ? data::denormalize(row, *ckpt.scaler) : row;
    // Actuals come straight from the raw panel so evaluation compares
    // against exact counts, not a normalization round-trip.
    const std::size_t target_row = n_train + t +
                                   static_cast<std::size_t>(ckpt.config.m) -
                                   1 + static_cast<std::size_t>(h_steps);
    cell.target_rows[t] = target_row;
    for (std::size_t j = 0; j < n; ++j) {
      cell.pred_counts.at(t, j) = counts.at(0, j);
      cell.actual_counts.at(t, j) = exp.panel.values.at(target_row, j);
    }
  }
  return cell;
}

} // namespace

int cmd_evaluate(const EvaluateArgs &args, std::ostream &out,
                 std::ostream &err) {
  try {
    const ExperimentConfig config =
        parse_experiment_config(io::read_file(args.config_path));
    const std::string dir = resolve_out_dir(args.out_dir, config.out_dir);
    ensure_dir(dir);
    const ExperimentData exp = load_experiment(config, err);

    for (const model::Arch arch : config.archs) {
      // One report per repeat, all laid out identically; the published
      // report is their cell-wise mean.
      std::vector<std::vector<metrics::EvalSlice>> slices(
          static_cast<std::size_t>(config.repeats));
      struct Trace {
        forecast::Method method;
        int horizon_min;
        ad::Tensor pred_sum; // summed across repeats
        ad::Tensor actual;
        std::vector<std::size_t> target_rows;
      };
      std::vector<Trace> traces;

      for (const int h_min : config.horizons_min) {
        const int h = h_min / config.interval_min;
        for (const forecast::Method method : config.methods) {
          const int ckpt_h = method == forecast::Method::Direct ? h : 1;
          Trace trace;
          trace.method = method;
          trace.horizon_min = h_min;
          for (int r = 0; r < config.repeats; ++r) {
            const train::Checkpoint ckpt = load_compatible_checkpoint(
                joined(dir, checkpoint_name(arch, ckpt_h, r)), exp,
                args.strict);
            CellEval cell =
                evaluate_cell(ckpt, exp, config.split_ratio, h, method);
            if (r == 0) {
              trace.pred_sum = cell.pred_counts;
              trace.actual = cell.actual_counts;
              trace.target_rows = cell.target_rows;
            } else {
              for (std::size_t i = 0; i < cell.pred_counts.size(); ++i)
                trace.pred_sum[i] += cell.pred_counts[i];
            }
            metrics::EvalSlice slice;
            slice.horizon_min = h_min;
            slice.method = forecast::to_string(method);
            slice.predictions = std::move(cell.pred_counts);
            slice.targets = std::move(cell.actual_counts);
            slices[static_cast<std::size_t>(r)].push_back(std::move(slice));
          }
          traces.push_back(std::move(trace));
        }
      }

      std::vector<metrics::ForecastReport> repeat_reports;
      repeat_reports.reserve(slices.size());
      for (const std::vector<metrics::EvalSlice> &s : slices)
        repeat_reports.push_back(
            metrics::build_report(s, exp.panel.site_order));
      const metrics::ForecastReport report =
          metrics::average_reports(repeat_reports);

      const std::string csv_path = joined(dir, report_name(arch));
      io::write_file_atomic(csv_path, metrics::report_csv(report));
      const std::string table = metrics::report_table(report);
      io::write_file_atomic(
          joined(dir, "report_" + model::to_string(arch) + ".txt"), table);

      const double inv_repeats = 1.0 / static_cast<double>(config.repeats);
      for (const Trace &trace : traces) {
        std::string csv = "timestamp,site_id,actual,predicted\n";
        const std::size_t k = trace.actual.shape().rows();
        const std::size_t n = trace.actual.shape().cols();
        for (std::size_t t = 0; t < k; ++t) {
          const std::string when = io::format_timestamp(
              exp.panel.timestamps[trace.target_rows[t]]);
          for (std::size_t j = 0; j < n; ++j) {
            csv += when;
            csv += ',';
            csv += exp.panel.site_order[j];
            csv += ',';
            csv += io::fmt_double(trace.actual.at(t, j));
            csv += ',';
            csv += io::fmt_double(trace.pred_sum.at(t, j) * inv_repeats);
            csv += '\n';
          }
        }
        io::write_file_atomic(
            joined(dir, trace_name(arch, trace.method, trace.horizon_min)),
            csv);
      }

      out << "model " << model::to_string(arch) << " (" << config.repeats
          << " repeat" << (config.repeats == 1 ? "" : "s")
          << " averaged):\n\n";
      out << table;
      out << "wrote " << csv_path << "\n";
    }
    return 0;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

namespace {

/// Reads a `site_id,capacity` CSV covering every site, in site order.
std::vector<double> load_capacities(const std::string &path,
                                    const std::vector<std::string> &sites) {
  const std::vector<std::string> lines = io::split_lines(io::read_file(path));
  if (lines.empty() || lines[0] != "site_id,capacity")
    throw IngestionError(path + ": expected header 'site_id,capacity'");
  std::map<std::string, double> by_site;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty())
      continue;
    const std::vector<std::string> f = io::split_csv(lines[i]);
    if (f.size() != 2)
      throw IngestionError(path + " line " + std::to_string(i + 1) +
                           ": expected 2 fields");
    const double cap = io::parse_double(f[1], path);
    if (cap < 0.0)
      throw ValidationError(path + ": capacity for '" + f[0] +
                            "' is negative");
    if (!by_site.emplace(f[0], cap).second)
      throw ValidationError(path + ": duplicate site '" + f[0] + "'");
  }
  std::vector<double> caps;
  caps.reserve(sites.size());
  for (const std::string &site : sites) {
    const auto it = by_site.find(site);
    if (it == by_site.end())
      throw ValidationError(path + ": no capacity for site '" + site + "'");
    caps.push_back(it->second);
  }
  return caps;
}

} // namespace

int cmd_predict(const PredictArgs &args, std::ostream &out,
                std::ostream &err) {
  try {
    const ExperimentConfig config =
        parse_experiment_config(io::read_file(args.config_path));
    const std::string dir = resolve_out_dir(args.out_dir, config.out_dir);
    ensure_dir(dir);
    if (args.checkpoint.empty())
      throw ConfigError("predict: --checkpoint is required");
    if (config.series_csv.empty())
      throw ConfigError("series_csv is required");

    const train::Checkpoint ckpt = train::load_checkpoint(args.checkpoint);
    std::vector<std::string> warnings;
    const data::TimeSeriesPanel panel =
        data::load_series(config.series_csv, ckpt.interval_min,
                          ckpt.site_order, &warnings);
    for (const std::string &w : warnings)
      err << "warning: " << w << "\n";

    const data::TimeSeriesPanel scaled =
        ckpt.scaler ? data::normalize_with(panel, *ckpt.scaler) : panel;
    const std::size_t m = static_cast<std::size_t>(ckpt.config.m);
    const std::size_t n = panel.sites();
    if (scaled.steps() < m)
      throw ContractError("predict: series has " +
                          std::to_string(scaled.steps()) +
                          " rows but the model needs a " + std::to_string(m) +
                          "-row window");
    ad::Tensor window(ad::Shape::mat(m, n));
    const std::size_t first = scaled.steps() - m;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        window.at(i, j) = scaled.values.at(first + i, j);

    const forecast::Method method = forecast::method_from_string(args.method);
    const int interval = ckpt.interval_min;

    // Forecast rows: (horizon steps, denormalized counts per site).
    std::vector<std::pair<int, std::vector<double>>> forecast_rows;
    if (method == forecast::Method::Direct) {
      const int h = ckpt.config.h;
      if (args.horizon_min != 0 && args.horizon_min != h * interval)
        throw ConfigError(
            "predict: this checkpoint forecasts a fixed " +
            std::to_string(h * interval) +
            "-min horizon; train a dedicated model for other horizons or "
            "use the iterative method");
      const forecast::Forecast f = forecast::direct_predict(ckpt, window, h);
      forecast_rows.emplace_back(h, f.counts);
    } else {
      const int h_min = args.horizon_min > 0 ? args.horizon_min
                                             : 6 * interval;
      if (h_min % interval != 0)
        throw ConfigError("predict: horizon " + std::to_string(h_min) +
                          " min is not divisible by the " +
                          std::to_string(interval) + "-min interval");
      const int h = h_min / interval;
      std::vector<std::vector<double>> trajectory;
      forecast::iterative_predict(ckpt, window, h, &trajectory);
      for (int i = 0; i < h; ++i) {
        ad::Tensor row(ad::Shape::mat(1, n));
        for (std::size_t j = 0; j < n; ++j)
          row.at(0, j) = trajectory[static_cast<std::size_t>(i)][j];
        const ad::Tensor counts =
            ckpt.scaler ? data::denormalize(row, *ckpt.scaler) : row;
        std::vector<double> values(n);
        for (std::size_t j = 0; j < n; ++j)
          values[j] = counts.at(0, j);
        forecast_rows.emplace_back(i + 1, std::move(values));
      }
    }

    std::vector<double> capacities;
    if (!config.capacity_csv.empty())
      capacities = load_capacities(config.capacity_csv, panel.site_order);

    ad::Tensor raw(ad::Shape::mat(forecast_rows.size(), n));
    for (std::size_t i = 0; i < forecast_rows.size(); ++i)
      for (std::size_t j = 0; j < n; ++j)
        raw.at(i, j) = forecast_rows[i].second[j];
    const ad::Tensor counts = forecast::present_counts(
        raw, capacities.empty() ? nullptr : &capacities);

    const io::Timestamp last = panel.timestamps.back();
    std::string csv = "timestamp,site_id,horizon_min,method,predicted,count\n";
    for (std::size_t i = 0; i < forecast_rows.size(); ++i) {
      const int h = forecast_rows[i].first;
      io::Timestamp when = last;
      when.epoch_s += static_cast<std::int64_t>(h) * interval * 60;
      for (std::size_t j = 0; j < n; ++j) {
        csv += io::format_timestamp(when);
        csv += ',';
        csv += panel.site_order[j];
        csv += ',';
        csv += std::to_string(h * interval);
        csv += ',';
        csv += forecast::to_string(method);
        csv += ',';
        csv += io::fmt_double(raw.at(i, j));
        csv += ',';
        csv += std::to_string(static_cast<long long>(counts.at(i, j)));
        csv += '\n';
      }
    }
    const std::string path = joined(dir, "predictions.csv");
    io::write_file_atomic(path, csv);

    const std::size_t final_row = forecast_rows.size() - 1;
    const int final_h = forecast_rows[final_row].first;
    io::Timestamp when = last;
    when.epoch_s += static_cast<std::int64_t>(final_h) * interval * 60;
    out << "forecast at " << io::format_timestamp(when) << " ("
        << final_h * interval << " min ahead, " << forecast::to_string(method)
        << "):\n";
    for (std::size_t j = 0; j < n; ++j)
      out << "  " << panel.site_order[j] << ": "
          << static_cast<long long>(counts.at(final_row, j)) << "\n";
    out << "wrote " << path << "\n";
    return 0;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_compare(const CompareArgs &args, std::ostream &out, std::ostream &err,
                metrics::CompareTally *tally_out) {
  try {
    const metrics::ForecastReport a =
        metrics::parse_report_csv(io::read_file(args.report_a));
    const metrics::ForecastReport b =
        metrics::parse_report_csv(io::read_file(args.report_b));
    const metrics::CompareTally tally =
        metrics::compare_reports(a, b, args.min_horizon_min);

    out << "A: " << args.report_a << "\n";
    out << "B: " << args.report_b << "\n";
    out << "compared " << tally.compared << " (site, horizon) cells";
    if (args.min_horizon_min > 0)
      out << " at horizons >= " << args.min_horizon_min << " min";
    out << "\n";
    for (const metrics::CompareTally::Line &line : tally.lines) {
      const char *label = line.metric == "pct" ? "mape/smape" : line.metric.c_str();
      out << "  " << label << ": A wins " << line.a_wins << ", B wins "
          << line.b_wins << ", ties " << line.ties << "\n";
    }
    if (tally_out)
      *tally_out = tally;
    return 0;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_config(std::ostream &out) {
  out << format_experiment_config(ExperimentConfig{});
  return 0;
}

} // namespace parkcast::cli
