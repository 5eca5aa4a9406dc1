#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "parkcast/forecast.hpp"
#include "parkcast/geo.hpp"
#include "parkcast/metrics.hpp"
#include "parkcast/train.hpp"

namespace parkcast::cli {

/// Every knob of a full experiment, captured in one file so a run can be
/// reproduced from a single artifact. Horizons are given in minutes and
/// converted to steps against the panel interval; training repeats r use
/// seed_base + r.
struct ExperimentConfig {
  // Paths.
  std::string series_csv;
  std::string coords_csv;
  std::string out_dir = "out";
  std::string capacity_csv; // optional per-site capacity bounds

  // Graph construction.
  double epsilon_km = geo::kDefaultEpsilonKm;
  double radius_km = geo::kEarthRadiusKm;
  geo::WeightMode weight_mode = geo::WeightMode::Distance;

  // Data preparation.
  int interval_min = 5;
  double split_ratio = 0.8;
  /// Fraction of panel rows the scaler is fitted on; 0 follows
  /// split_ratio so the scaler sees exactly the training portion.
  double fit_fraction = 0.0;

  // Training (arch, h and seed are filled in per experiment cell).
  std::vector<model::Arch> archs{model::Arch::Stgbgru};
  train::TrainConfig base;

  // Forecast evaluation.
  std::vector<int> horizons_min{5, 15, 30, 45, 60};
  std::vector<forecast::Method> methods{forecast::Method::Direct,
                                        forecast::Method::Iterative};
  int repeats = 1;
  std::uint64_t seed_base = 42;

  double scaler_fit_fraction() const {
    return fit_fraction > 0.0 ? fit_fraction : split_ratio;
  }
};

/// Rejects horizons not divisible by the interval, repeats < 1, empty
/// model/method lists, duplicate entries and out-of-range fractions.
void validate(const ExperimentConfig &config);

/// Canonical `key=value` text (one pair per line, # comments allowed).
std::string format_experiment_config(const ExperimentConfig &config);
/// Inverse of format_experiment_config; unknown keys throw ConfigError
/// naming the key.
ExperimentConfig parse_experiment_config(const std::string &text);

/// Output directory precedence: explicit flag, then the PARKCAST_OUT_DIR
/// environment variable, then the config value.
std::string resolve_out_dir(const std::string &flag_value,
                            const std::string &config_value);

/// Checkpoint/history/report file names for one experiment cell, relative
/// to the output directory.
std::string checkpoint_name(model::Arch arch, int h_steps, int repeat);
std::string history_name(model::Arch arch, int h_steps, int repeat);
std::string report_name(model::Arch arch);
std::string trace_name(model::Arch arch, forecast::Method method,
                       int horizon_min);

// Each command returns a process exit code: 0 iff no error path was taken.
// Normal output goes to `out`, diagnostics and errors to `err`.

struct GraphArgs {
  std::string coords_csv;
  double epsilon_km = geo::kDefaultEpsilonKm;
  double radius_km = geo::kEarthRadiusKm;
  std::string weight_mode = "distance";
  std::string out_dir; // resolved against env/default
};

/// Builds the site graph and writes adjacency.csv plus
/// adjacency_normalized.csv; prints node count, edge count and the
/// min/max pairwise distance. A graph without edges gets a warning.
int cmd_graph(const GraphArgs &args, std::ostream &out, std::ostream &err);

struct TrainArgs {
  std::string config_path;
  std::string out_dir; // overrides the config when non-empty
  bool force = false;  // retrain cells whose checkpoint already exists
};

/// Trains one checkpoint per (model, horizon, repeat) cell; cells whose
/// checkpoint file already exists are skipped unless --force. When the
/// iterative method is requested, a one-step model is trained even if the
/// horizon list does not contain the unit horizon.
int cmd_train(const TrainArgs &args, std::ostream &out, std::ostream &err);

struct EvaluateArgs {
  std::string config_path;
  std::string out_dir;
  bool strict = true; // verify checkpoint/data fingerprints
};

/// Evaluates every (model, horizon, method) cell on the held-out test
/// split, averaging metrics across repeats; writes one report CSV and one
/// aligned text table per model plus per-(method, horizon) trace CSVs of
/// actual vs predicted counts.
int cmd_evaluate(const EvaluateArgs &args, std::ostream &out,
                 std::ostream &err);

struct PredictArgs {
  std::string config_path;
  std::string checkpoint;
  std::string method = "direct";
  int horizon_min = 0; // 0: direct uses the checkpoint's trained horizon
  std::string out_dir;
};

/// Forecasts past the end of the series from the last input window and
/// writes predictions.csv. The iterative method emits every intermediate
/// step (each is a genuine shorter-horizon forecast); direct emits the
/// single trained horizon.
int cmd_predict(const PredictArgs &args, std::ostream &out,
                std::ostream &err);

struct CompareArgs {
  std::string report_a;
  std::string report_b;
  int min_horizon_min = 0;
};

/// Tallies, per metric, the cells where report A strictly beats report B
/// and vice versa. `tally_out`, when given, receives the full tally.
int cmd_compare(const CompareArgs &args, std::ostream &out, std::ostream &err,
                metrics::CompareTally *tally_out = nullptr);

/// Prints the default experiment config with explanatory comments.
int cmd_config(std::ostream &out);

} // namespace parkcast::cli
