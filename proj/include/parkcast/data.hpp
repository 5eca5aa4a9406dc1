#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "parkcast/io.hpp"
#include "parkcast/tensor.hpp"

namespace parkcast::data {

/// Per-column (min, max) ranges captured at normalization time.
/// min == max marks a degenerate constant column.
struct Scaler {
  std::vector<double> col_min;
  std::vector<double> col_max;
  std::size_t columns() const { return col_min.size(); }
};

/// Evenly spaced multivariate series: row = time step, column = site.
struct TimeSeriesPanel {
  std::vector<io::Timestamp> timestamps;
  ad::Tensor values; // T x N
  std::vector<std::string> site_order;
  int interval_min = 5;
  /// Present once the panel holds normalized values.
  std::optional<Scaler> scaler;

  std::size_t steps() const { return timestamps.size(); }
  std::size_t sites() const { return site_order.size(); }
};

/// Checks the panel invariants: strictly increasing, evenly spaced
/// timestamps; value matrix T x N; finite values.
void validate_panel(const TimeSeriesPanel &panel);

/// Longest run of missing steps forward-fill will bridge (30 minutes at
/// the 5-minute sampling interval).
inline constexpr std::size_t kMaxGapSteps = 6;

/// Reads a long-format CSV `timestamp,site_id,available` into a panel.
/// Rows are pivoted onto the regular timestamp grid; missing cells are
/// forward-filled (a leading gap copies the first observation) up to
/// kMaxGapSteps consecutive steps. When `expected_sites` is non-empty the
/// file must contain exactly those sites; otherwise sites are taken from
/// the file in ascending site_id order. Fill events are appended to
/// `warnings` when provided.
TimeSeriesPanel load_series(const std::string &path, int expected_interval_min,
                            const std::vector<std::string> &expected_sites = {},
                            std::vector<std::string> *warnings = nullptr);

/// Per-column min-max scaling to [0, 1], fitted on the first
/// max(1, floor(fit_fraction * T)) rows and applied to all rows; with
/// fit_fraction = 1 the scaler sees the whole series. Values outside the
/// fitted range (possible for later rows when fit_fraction < 1) map
/// outside [0, 1] and are intentionally not clamped. Constant columns map
/// to 0. Throws ContractError when the panel is already normalized.
TimeSeriesPanel minmax_normalize(const TimeSeriesPanel &panel,
                                 double fit_fraction);

/// Applies an already-fitted scaler to a raw panel (evaluation data must
/// enter the exact value domain the model was trained in). Degenerate
/// columns map to 0, mirroring minmax_normalize.
TimeSeriesPanel normalize_with(const TimeSeriesPanel &panel,
                               const Scaler &scaler);

/// Inverse of minmax_normalize for a row-major matrix (rank 1 = one row)
/// whose columns follow the scaler's column order. Degenerate columns
/// return their constant.
ad::Tensor denormalize(const ad::Tensor &values, const Scaler &scaler);

enum class WindowMode { Direct, IterativeBase };

/// Supervised samples cut from a panel by a sliding window.
struct WindowedDataset {
  ad::Tensor inputs;  // samples x m x N
  ad::Tensor targets; // samples x N
  std::size_t m = 0;
  std::size_t h = 0;
  WindowMode mode = WindowMode::Direct;

  std::size_t samples() const {
    return inputs.shape().rank == 3 ? inputs.shape().batches() : 0;
  }
};

/// Windows the panel: sample k has inputs rows k..k+m-1 and target row
/// k+m-1+h, giving T-m-h+1 samples.
WindowedDataset sliding_windows(const TimeSeriesPanel &panel, std::size_t m,
                                std::size_t h);

/// Chronological split: first floor(ratio * samples) samples train, rest
/// test. Both sides must be non-empty.
std::pair<WindowedDataset, WindowedDataset>
train_test_split(const WindowedDataset &dataset, double ratio);

/// Writes the wide-format panel CSV `timestamp,<site...>`.
void save_panel_csv(const TimeSeriesPanel &panel, const std::string &path);

/// Writes the long-format series CSV `timestamp,site_id,available` that
/// load_series reads; raw panels round-trip exactly.
void save_series_csv(const TimeSeriesPanel &panel, const std::string &path);

} // namespace parkcast::data
