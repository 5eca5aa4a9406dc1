#include "parkcast/data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "parkcast/error.hpp"

namespace parkcast::data {

using ad::Shape;
using ad::Tensor;

void validate_panel(const TimeSeriesPanel &panel) {
  const std::size_t t = panel.steps(), n = panel.sites();
  if (t == 0 || n == 0)
    throw ValidationError("panel: empty");
  if (panel.interval_min <= 0)
    throw ValidationError("panel: interval must be positive");
  if (panel.values.shape() != Shape::mat(t, n))
    throw ShapeError("panel: values " + panel.values.shape().str() +
                     " do not match " + std::to_string(t) + " steps x " +
                     std::to_string(n) + " sites");
  const std::int64_t step_s = static_cast<std::int64_t>(panel.interval_min) * 60;
  for (std::size_t i = 1; i < t; ++i)
    if (panel.timestamps[i].epoch_s - panel.timestamps[i - 1].epoch_s != step_s)
      throw ValidationError("panel: uneven spacing at " +
                            io::format_timestamp(panel.timestamps[i]));
  panel.values.check_finite("panel values");
  if (panel.scaler && panel.scaler->columns() != n)
    throw ShapeError("panel: scaler has " +
                     std::to_string(panel.scaler->columns()) +
                     " columns for " + std::to_string(n) + " sites");
}

TimeSeriesPanel load_series(const std::string &path, int expected_interval_min,
                            const std::vector<std::string> &expected_sites,
                            std::vector<std::string> *warnings) {
  if (expected_interval_min <= 0)
    throw ContractError("load_series: interval must be positive");
  const auto lines = io::split_lines(io::read_file(path));
  if (lines.empty())
    throw IngestionError(path + ": empty file");
  if (io::split_csv(lines[0]) !=
      std::vector<std::string>{"timestamp", "site_id", "available"})
    throw IngestionError(path +
                         ": expected header 'timestamp,site_id,available'");

  struct Cell {
    io::Timestamp ts;
    std::string site;
    double value;
  };
  std::vector<Cell> cells;
  std::set<std::string> sites_seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty())
      continue;
    const auto fields = io::split_csv(lines[i]);
    const std::string where = path + " line " + std::to_string(i + 1);
    if (fields.size() != 3)
      throw IngestionError(where + ": expected 3 fields, got " +
                           std::to_string(fields.size()));
    const double v = io::parse_double(fields[2], where + " available");
    if (v < 0.0)
      throw ValidationError(where + ": negative count " + fields[2]);
    cells.push_back({io::parse_timestamp(fields[0]), fields[1], v});
    sites_seen.insert(fields[1]);
  }
  if (cells.empty())
    throw IngestionError(path + ": no data rows");

  // Resolve the column order.
  std::vector<std::string> site_order(sites_seen.begin(), sites_seen.end());
  if (!expected_sites.empty()) {
    for (const auto &s : sites_seen)
      if (std::find(expected_sites.begin(), expected_sites.end(), s) ==
          expected_sites.end())
        throw ValidationError(path + ": unknown site '" + s + "'");
    site_order = expected_sites;
  }
  std::map<std::string, std::size_t> col;
  for (std::size_t j = 0; j < site_order.size(); ++j)
    col[site_order[j]] = j;

  // Regular timestamp grid spanning the observed range.
  const std::int64_t step_s =
      static_cast<std::int64_t>(expected_interval_min) * 60;
  std::int64_t lo = cells.front().ts.epoch_s, hi = lo;
  for (const Cell &c : cells) {
    lo = std::min(lo, c.ts.epoch_s);
    hi = std::max(hi, c.ts.epoch_s);
  }
  std::vector<std::string> off_grid;
  for (const Cell &c : cells)
    if ((c.ts.epoch_s - lo) % step_s != 0) {
      off_grid.push_back(io::format_timestamp(c.ts));
      if (off_grid.size() >= 5)
        break;
    }
  if (!off_grid.empty()) {
    std::string list;
    for (const auto &s : off_grid)
      list += (list.empty() ? "" : ", ") + s;
    throw IngestionError(path + ": timestamps off the " +
                         std::to_string(expected_interval_min) +
                         "-minute grid: " + list);
  }

  const std::size_t t_steps = static_cast<std::size_t>((hi - lo) / step_s) + 1;
  const std::size_t n = site_order.size();

  TimeSeriesPanel panel;
  panel.interval_min = expected_interval_min;
  panel.site_order = site_order;
  panel.timestamps.resize(t_steps);
  for (std::size_t i = 0; i < t_steps; ++i)
    panel.timestamps[i] =
        io::Timestamp{lo + static_cast<std::int64_t>(i) * step_s};
  panel.values.assign_shape(Shape::mat(t_steps, n));
  std::vector<std::uint8_t> present(t_steps * n, 0);

  for (const Cell &c : cells) {
    auto it = col.find(c.site);
    const std::size_t row = static_cast<std::size_t>((c.ts.epoch_s - lo) / step_s);
    const std::size_t idx = row * n + it->second;
    if (present[idx])
      throw IngestionError(path + ": duplicate row for (" +
                           io::format_timestamp(c.ts) + ", " + c.site + ")");
    present[idx] = 1;
    panel.values[idx] = c.value;
  }

  // Forward-fill per column, bounded by kMaxGapSteps; a leading gap takes
  // the first observation.
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t first = t_steps;
    for (std::size_t i = 0; i < t_steps; ++i)
      if (present[i * n + j]) {
        first = i;
        break;
      }
    if (first == t_steps)
      throw IngestionError(path + ": site '" + site_order[j] +
                           "' has no observations");
    if (first > kMaxGapSteps)
      throw IngestionError(path + ": site '" + site_order[j] + "' missing " +
                           std::to_string(first) + " leading steps (max " +
                           std::to_string(kMaxGapSteps) + ")");
    std::size_t filled_here = 0;
    for (std::size_t i = 0; i < first; ++i) {
      panel.values.at(i, j) = panel.values.at(first, j);
      ++filled_here;
    }
    std::size_t run = 0;
    for (std::size_t i = first + 1; i < t_steps; ++i) {
      if (present[i * n + j]) {
        run = 0;
        continue;
      }
      if (++run > kMaxGapSteps)
        throw IngestionError(path + ": site '" + site_order[j] + "' gap of " +
                             std::to_string(run) + "+ steps ending " +
                             io::format_timestamp(panel.timestamps[i]) +
                             " exceeds " + std::to_string(kMaxGapSteps));
      panel.values.at(i, j) = panel.values.at(i - 1, j);
      ++filled_here;
    }
    if (filled_here > 0 && warnings)
      warnings->push_back("site " + site_order[j] + ": filled " +
                          std::to_string(filled_here) + " missing step(s)");
  }

  validate_panel(panel);
  return panel;
}

TimeSeriesPanel minmax_normalize(const TimeSeriesPanel &panel,
                                 double fit_fraction) {
  validate_panel(panel);
  if (panel.scaler)
    throw ContractError("normalize: panel is already normalized");
  if (!(fit_fraction > 0.0) || fit_fraction > 1.0)
    throw ContractError("normalize: fit fraction must be in (0, 1]");

  const std::size_t t = panel.steps(), n = panel.sites();
  const std::size_t fit_rows = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(fit_fraction * static_cast<double>(t))));

  Scaler scaler;
  scaler.col_min.resize(n);
  scaler.col_max.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    double lo = panel.values.at(0, j), hi = lo;
    for (std::size_t i = 1; i < fit_rows; ++i) {
      lo = std::min(lo, panel.values.at(i, j));
      hi = std::max(hi, panel.values.at(i, j));
    }
    scaler.col_min[j] = lo;
    scaler.col_max[j] = hi;
  }

  TimeSeriesPanel out = panel;
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = scaler.col_min[j];
    const double range = scaler.col_max[j] - lo;
    for (std::size_t i = 0; i < t; ++i)
      out.values.at(i, j) =
          range == 0.0 ? 0.0 : (panel.values.at(i, j) - lo) / range;
  }
  out.scaler = std::move(scaler);
  return out;
}

TimeSeriesPanel normalize_with(const TimeSeriesPanel &panel,
                               const Scaler &scaler) {
  validate_panel(panel);
  if (panel.scaler)
    throw ContractError("normalize: panel is already normalized");
  const std::size_t t = panel.steps(), n = panel.sites();
  if (scaler.columns() != n)
    throw ShapeError("normalize: scaler has " +
                     std::to_string(scaler.columns()) + " columns for " +
                     std::to_string(n) + " sites");

  TimeSeriesPanel out = panel;
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = scaler.col_min[j];
    const double range = scaler.col_max[j] - lo;
    for (std::size_t i = 0; i < t; ++i)
      out.values.at(i, j) =
          range == 0.0 ? 0.0 : (panel.values.at(i, j) - lo) / range;
  }
  out.scaler = scaler;
  return out;
}

Tensor denormalize(const Tensor &values, const Scaler &scaler) {
  const Shape &s = values.shape();
  const std::size_t n = scaler.columns();
  if (s.rank > 2 || s.cols() != n)
    throw ShapeError("denormalize: " + s.str() + " against " +
                     std::to_string(n) + " scaler columns");
  const std::size_t rows = s.rank == 2 ? s.rows() : 1;
  Tensor out = values;
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = scaler.col_min[j];
    const double range = scaler.col_max[j] - lo;
    for (std::size_t i = 0; i < rows; ++i)
      out[i * n + j] = range == 0.0 ? lo : values[i * n + j] * range + lo;
  }
  return out;
}

WindowedDataset sliding_windows(const TimeSeriesPanel &panel, std::size_t m,
                                std::size_t h) {
  validate_panel(panel);
  if (m < 1)
    throw ContractError("windows: m must be at least 1");
  if (h < 1)
    throw ContractError("windows: h must be at least 1");
  const std::size_t t = panel.steps(), n = panel.sites();
  if (t < m + h)
    throw ValidationError("windows: need at least " + std::to_string(m + h) +
                          " steps for m=" + std::to_string(m) +
                          ", h=" + std::to_string(h) + ", have " +
                          std::to_string(t));

  const std::size_t count = t - m - h + 1;
  WindowedDataset ds;
  ds.m = m;
  ds.h = h;
  ds.mode = h == 1 ? WindowMode::IterativeBase : WindowMode::Direct;
  ds.inputs.assign_shape(Shape::cube(count, m, n));
  ds.targets.assign_shape(Shape::mat(count, n));
  for (std::size_t k = 0; k < count; ++k) {
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t j = 0; j < n; ++j)
        ds.inputs.at3(k, r, j) = panel.values.at(k + r, j);
    for (std::size_t j = 0; j < n; ++j)
      ds.targets.at(k, j) = panel.values.at(k + m - 1 + h, j);
  }
  return ds;
}

namespace {

WindowedDataset slice(const WindowedDataset &ds, std::size_t from,
                      std::size_t count) {
  const std::size_t m = ds.inputs.shape().rows();
  const std::size_t n = ds.inputs.shape().cols();
  WindowedDataset out;
  out.m = ds.m;
  out.h = ds.h;
  out.mode = ds.mode;
  out.inputs.assign_shape(Shape::cube(count, m, n));
  out.targets.assign_shape(Shape::mat(count, n));
  std::copy_n(ds.inputs.data() + from * m * n, count * m * n, out.inputs.data());
  std::copy_n(ds.targets.data() + from * n, count * n, out.targets.data());
  return out;
}

} // namespace

std::pair<WindowedDataset, WindowedDataset>
train_test_split(const WindowedDataset &dataset, double ratio) {
  if (!(ratio > 0.0) || !(ratio < 1.0))
    throw ContractError("split: ratio must be in (0, 1)");
  const std::size_t total = dataset.samples();
  const std::size_t n_train =
      static_cast<std::size_t>(std::floor(ratio * static_cast<double>(total)));
  if (n_train == 0 || n_train == total)
    throw ContractError("split: ratio " + io::fmt_double(ratio) + " leaves " +
                        (n_train == 0 ? "train" : "test") + " side empty for " +
                        std::to_string(total) + " samples");
  return {slice(dataset, 0, n_train), slice(dataset, n_train, total - n_train)};
}

void save_panel_csv(const TimeSeriesPanel &panel, const std::string &path) {
  validate_panel(panel);
  std::string out = "timestamp";
  for (const auto &s : panel.site_order)
    out += "," + s;
  out += "\n";
  for (std::size_t i = 0; i < panel.steps(); ++i) {
    out += io::format_timestamp(panel.timestamps[i]);
    for (std::size_t j = 0; j < panel.sites(); ++j)
      out += "," + io::fmt_double(panel.values.at(i, j));
    out += "\n";
  }
  io::write_file_atomic(path, out);
}

void save_series_csv(const TimeSeriesPanel &panel, const std::string &path) {
  validate_panel(panel);
  std::string out = "timestamp,site_id,available\n";
  for (std::size_t i = 0; i < panel.steps(); ++i) {
    const std::string when = io::format_timestamp(panel.timestamps[i]);
    for (std::size_t j = 0; j < panel.sites(); ++j) {
      out += when;
      out += ',';
      out += panel.site_order[j];
      out += ',';
      out += io::fmt_double(panel.values.at(i, j));
      out += '\n';
    }
  }
  io::write_file_atomic(path, out);
}

} // namespace parkcast::data
