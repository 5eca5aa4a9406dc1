#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "parkcast/tensor.hpp"

namespace parkcast::metrics {

/// Mean absolute error (1/T) sum |y - yhat|. Lengths must match, T >= 1.
double mae(const std::vector<double> &actual, const std::vector<double> &pred);

/// Mean absolute percentage error (100/T) sum |y - yhat| / y. Returns
/// nullopt when any actual value is zero (the division-by-zero case);
/// callers substitute smape() and mark the cell.
std::optional<double> mape(const std::vector<double> &actual,
                           const std::vector<double> &pred);

/// Symmetric MAPE (100/T) sum |y - yhat| / ((|y| + |yhat|) / 2), in
/// [0, 200]. An element where both values are zero contributes 0.
double smape(const std::vector<double> &actual,
             const std::vector<double> &pred);

/// Root mean squared error sqrt((1/T) sum (y - yhat)^2).
double rmse(const std::vector<double> &actual,
            const std::vector<double> &pred);

/// One evaluated (site, horizon, method) cell. `mape` is empty when any
/// actual was zero; `mape_or_smape` then carries smape and `substituted`
/// is set, so reports always have a percentage column.
struct ReportCell {
  std::string site;
  int horizon_min = 0;
  std::string method;
  double mae = 0.0;
  double rmse = 0.0;
  double smape = 0.0;
  std::optional<double> mape;
  double mape_or_smape = 0.0;
  bool substituted = false;
  std::size_t count = 0;
};

struct ForecastReport {
  std::vector<ReportCell> cells; // slice-major, site-minor
};

/// Aligned predictions and targets for one (horizon, method) pair, in
/// original count units. Rows are samples, columns follow site_order.
struct EvalSlice {
  int horizon_min = 0;
  std::string method;
  ad::Tensor predictions;
  ad::Tensor targets;
};

/// Evaluates every slice per site: one cell per (slice, site), cells
/// ordered slice-major then by site_order. Shape mismatches throw.
ForecastReport build_report(const std::vector<EvalSlice> &slices,
                            const std::vector<std::string> &site_order);

/// CSV form: `site,horizon_min,method,mae,rmse,mape_or_smape,substituted`.
std::string report_csv(const ForecastReport &report);

/// Fixed-width text: one block per (method, metric), sites as rows and
/// horizons as columns. Substituted percentage cells are starred.
std::string report_table(const ForecastReport &report);

/// Cell-wise arithmetic mean of reports laid out identically: cell i of
/// every report must agree on (site, horizon, method, substituted, count);
/// each metric value is averaged across reports. Used to average repeated
/// runs of the same experiment.
ForecastReport average_reports(const std::vector<ForecastReport> &reports);

/// Inverse of report_csv: parses the header and rows back into cells.
/// Substituted rows get `mape` empty and the percentage stored as smape;
/// exact mape/smape split is not recoverable from the CSV, but every
/// comparison field (mae, rmse, mape_or_smape) round-trips bitwise.
ForecastReport parse_report_csv(const std::string &text);

/// Win/loss tally between two reports sharing a (site, horizon) grid.
struct CompareCell {
  std::string site;
  int horizon_min = 0;
  double a = 0.0;
  double b = 0.0;
};

struct CompareTally {
  // Per metric (keyed "mae", "rmse", "pct"): cells where a < b, b < a, tie.
  struct Line {
    std::string metric;
    std::size_t a_wins = 0;
    std::size_t b_wins = 0;
    std::size_t ties = 0;
    std::vector<CompareCell> cells; // one per compared (site, horizon)
  };
  std::vector<Line> lines;
  std::size_t compared = 0; // (site, horizon) pairs after filtering
};

/// Compares reports cell-by-cell on (site, horizon_min), keeping only rows
/// with horizon_min >= min_horizon_min. The two reports must cover exactly
/// the same (site, horizon) set after filtering; lower metric wins.
CompareTally compare_reports(const ForecastReport &a, const ForecastReport &b,
                             int min_horizon_min = 0);

} // namespace parkcast::metrics
