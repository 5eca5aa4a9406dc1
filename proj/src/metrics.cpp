#include "parkcast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "parkcast/error.hpp"
#include "parkcast/io.hpp"

namespace parkcast::metrics {

namespace {

void check_pair(const std::vector<double> &actual,
                const std::vector<double> &pred, const char *op) {
  if (actual.size() != pred.size())
    throw ShapeError(std::string(op) + ": length mismatch (" +
                     std::to_string(actual.size()) + " vs " +
                     std::to_string(pred.size()) + ")");
  if (actual.empty())
    throw ShapeError(std::string(op) + ": needs at least one sample");
}

} // namespace

double mae(const std::vector<double> &actual,
           const std::vector<double> &pred) {
  check_pair(actual, pred, "mae");
  double sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i)
    sum += std::abs(actual[i] - pred[i]);
  return sum / static_cast<double>(actual.size());
}

std::optional<double> mape(const std::vector<double> &actual,
                           const std::vector<double> &pred) {
  check_pair(actual, pred, "mape");
  double sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] == 0.0)
      return std::nullopt;
    sum += std::abs(actual[i] - pred[i]) / actual[i];
  }
  return 100.0 * sum / static_cast<double>(actual.size());
}

double smape(const std::vector<double> &actual,
             const std::vector<double> &pred) {
  check_pair(actual, pred, "smape");
  double sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double denom = (std::abs(actual[i]) + std::abs(pred[i])) / 2.0;
    if (denom == 0.0)
      continue; // both zero: a perfect prediction contributes no error
    sum += std::abs(actual[i] - pred[i]) / denom;
  }
  return 100.0 * sum / static_cast<double>(actual.size());
}

double rmse(const std::vector<double> &actual,
            const std::vector<double> &pred) {
  check_pair(actual, pred, "rmse");
  double sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double e = actual[i] - pred[i];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(actual.size()));
}

ForecastReport build_report(const std::vector<EvalSlice> &slices,
                            const std::vector<std::string> &site_order) {
  const std::size_t n = site_order.size();
  if (n == 0)
    throw ShapeError("build_report: empty site order");

  ForecastReport report;
  for (const EvalSlice &slice : slices) {
    const ad::Shape ps = slice.predictions.shape();
    const ad::Shape ts = slice.targets.shape();
    if (!(ps == ts))
      throw ShapeError("build_report: predictions " + ps.str() +
                       " vs targets " + ts.str());
    if (ps.rank != 2 || ps.cols() != n)
      throw ShapeError("build_report: expected K x " + std::to_string(n) +
                       " matrices, got " + ps.str());
    const std::size_t k = ps.rows();
    if (k == 0)
      throw ShapeError("build_report: slice has no samples");

    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> a(k), p(k);
      for (std::size_t t = 0; t < k; ++t) {
        a[t] = slice.targets.at(t, j);
        p[t] = slice.predictions.at(t, j);
      }
      ReportCell cell;
      cell.site = site_order[j];
      cell.horizon_min = slice.horizon_min;
      cell.method = slice.method;
      cell.mae = mae(a, p);
      cell.rmse = rmse(a, p);
      cell.smape = smape(a, p);
      cell.mape = mape(a, p);
      cell.substituted = !cell.mape.has_value();
      cell.mape_or_smape = cell.substituted ? cell.smape : *cell.mape;
      cell.count = k;
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

std::string report_csv(const ForecastReport &report) {
  std::string out = "site,horizon_min,method,mae,rmse,mape_or_smape,"
                    "substituted\n";
  for (const ReportCell &c : report.cells) {
    out += c.site;
    out += ',';
    out += std::to_string(c.horizon_min);
    out += ',';
    out += c.method;
    out += ',';
    out += io::fmt_double(c.mae);
    out += ',';
    out += io::fmt_double(c.rmse);
    out += ',';
    out += io::fmt_double(c.mape_or_smape);
    out += ',';
    out += c.substituted ? '1' : '0';
    out += '\n';
  }
  return out;
}

namespace {

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

} // namespace

std::string report_table(const ForecastReport &report) {
  // Preserve first-seen orders rather than sorting, so the table follows
  // the report's own layout.
  std::vector<std::string> methods, sites;
  std::vector<int> horizons;
  for (const ReportCell &c : report.cells) {
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end())
      methods.push_back(c.method);
    if (std::find(sites.begin(), sites.end(), c.site) == sites.end())
      sites.push_back(c.site);
    if (std::find(horizons.begin(), horizons.end(), c.horizon_min) ==
        horizons.end())
      horizons.push_back(c.horizon_min);
  }

  auto find_cell = [&](const std::string &method, const std::string &site,
                       int horizon) -> const ReportCell * {
    for (const ReportCell &c : report.cells)
      if (c.method == method && c.site == site && c.horizon_min == horizon)
        return &c;
    return nullptr;
  };

  std::ostringstream out;
  std::size_t site_w = 4;
  for (const std::string &s : sites)
    site_w = std::max(site_w, s.size());

  struct MetricCol {
    const char *label;
    double ReportCell::*field;
    bool starrable;
  };
  const MetricCol metric_cols[] = {
      {"MAE", &ReportCell::mae, false},
      {"RMSE", &ReportCell::rmse, false},
      {"MAPE/SMAPE%", &ReportCell::mape_or_smape, true},
  };

  for (const std::string &method : methods) {
    for (const MetricCol &mc : metric_cols) {
      out << method << "  " << mc.label << "\n";
      out << std::string(site_w, ' ');
      for (const int h : horizons) {
        const std::string head = std::to_string(h) + "min";
        out << "  " << std::string(head.size() < 9 ? 9 - head.size() : 0, ' ')
            << head;
      }
      out << "\n";
      for (const std::string &site : sites) {
        out << site << std::string(site_w - site.size(), ' ');
        for (const int h : horizons) {
          const ReportCell *c = find_cell(method, site, h);
          std::string text = c ? fixed2(c->*(mc.field)) : std::string("-");
          if (c && mc.starrable && c->substituted)
            text += '*';
          out << "  " << std::string(text.size() < 9 ? 9 - text.size() : 0, ' ')
              << text;
        }
        out << "\n";
      }
      out << "\n";
    }
  }
  if (!report.cells.empty())
    out << "* percentage is SMAPE (MAPE undefined: some actual values are "
           "zero)\n";
  return out.str();
}

ForecastReport average_reports(const std::vector<ForecastReport> &reports) {
  if (reports.empty())
    throw ShapeError("average_reports: no reports");
  const std::size_t cells = reports.front().cells.size();
  for (const ForecastReport &r : reports)
    if (r.cells.size() != cells)
      throw ShapeError("average_reports: reports have " +
                       std::to_string(cells) + " vs " +
                       std::to_string(r.cells.size()) + " cells");

  ForecastReport out = reports.front();
  const double scale = 1.0 / static_cast<double>(reports.size());
  for (std::size_t i = 0; i < cells; ++i) {
    ReportCell &acc = out.cells[i];
    for (std::size_t r = 1; r < reports.size(); ++r) {
      const ReportCell &c = reports[r].cells[i];
      if (c.site != acc.site || c.horizon_min != acc.horizon_min ||
          c.method != acc.method)
        throw ShapeError("average_reports: cell " + std::to_string(i) +
                         " differs across reports (" + acc.site + " vs " +
                         c.site + ")");
      if (c.substituted != acc.substituted)
        throw ShapeError("average_reports: substitution flag differs at (" +
                         acc.site + ", " + std::to_string(acc.horizon_min) +
                         " min); reports must share their actuals");
      acc.mae += c.mae;
      acc.rmse += c.rmse;
      acc.smape += c.smape;
      acc.mape_or_smape += c.mape_or_smape;
      if (acc.mape && c.mape)
        *acc.mape += *c.mape;
    }
    acc.mae *= scale;
    acc.rmse *= scale;
    acc.smape *= scale;
    acc.mape_or_smape *= scale;
    if (acc.mape)
      *acc.mape *= scale;
  }
  return out;
}

ForecastReport parse_report_csv(const std::string &text) {
  const std::vector<std::string> lines = io::split_lines(text);
  if (lines.empty())
    throw IngestionError("report: empty file");
  const std::string header =
      "site,horizon_min,method,mae,rmse,mape_or_smape,substituted";
  if (lines[0] != header)
    throw IngestionError("report: expected header '" + header + "', got '" +
                         lines[0] + "'");

  ForecastReport report;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty())
      continue;
    const std::vector<std::string> f = io::split_csv(lines[i]);
    const std::string where = "report line " + std::to_string(i + 1);
    if (f.size() != 7)
      throw IngestionError(where + ": expected 7 fields, got " +
                           std::to_string(f.size()));
    ReportCell cell;
    cell.site = f[0];
    cell.horizon_min = static_cast<int>(io::parse_int(f[1], where));
    cell.method = f[2];
    cell.mae = io::parse_double(f[3], where);
    cell.rmse = io::parse_double(f[4], where);
    cell.mape_or_smape = io::parse_double(f[5], where);
    if (f[6] == "1")
      cell.substituted = true;
    else if (f[6] != "0")
      throw IngestionError(where + ": substituted flag must be 0 or 1, got '" +
                           f[6] + "'");
    // The CSV stores only the chosen percentage; restore what it implies.
    if (cell.substituted)
      cell.smape = cell.mape_or_smape;
    else
      cell.mape = cell.mape_or_smape;
    report.cells.push_back(std::move(cell));
  }
  if (report.cells.empty())
    throw IngestionError("report: no data rows");
  return report;
}

namespace {

struct CellKey {
  std::string site;
  int horizon_min;
  bool operator==(const CellKey &o) const {
    return horizon_min == o.horizon_min && site == o.site;
  }
  bool operator<(const CellKey &o) const {
    if (horizon_min != o.horizon_min)
      return horizon_min < o.horizon_min;
    return site < o.site;
  }
};

std::map<CellKey, const ReportCell *> index_cells(const ForecastReport &r,
                                                  int min_horizon_min,
                                                  const char *label) {
  std::map<CellKey, const ReportCell *> out;
  for (const ReportCell &c : r.cells) {
    if (c.horizon_min < min_horizon_min)
      continue;
    const CellKey key{c.site, c.horizon_min};
    if (!out.emplace(key, &c).second)
      throw ShapeError(std::string("compare: report ") + label +
                       " has duplicate cell (" + c.site + ", " +
                       std::to_string(c.horizon_min) + " min)");
  }
  return out;
}

} // namespace

CompareTally compare_reports(const ForecastReport &a, const ForecastReport &b,
                             int min_horizon_min) {
  const auto ia = index_cells(a, min_horizon_min, "A");
  const auto ib = index_cells(b, min_horizon_min, "B");
  if (ia.empty())
    throw ShapeError("compare: no cells at or beyond " +
                     std::to_string(min_horizon_min) + " min");
  for (const auto &[key, cell] : ia)
    if (!ib.count(key))
      throw ShapeError("compare: report B is missing cell (" + key.site +
                       ", " + std::to_string(key.horizon_min) + " min)");
  for (const auto &[key, cell] : ib)
    if (!ia.count(key))
      throw ShapeError("compare: report A is missing cell (" + key.site +
                       ", " + std::to_string(key.horizon_min) + " min)");

  struct MetricField {
    const char *name;
    double ReportCell::*field;
  };
  const MetricField fields[] = {
      {"mae", &ReportCell::mae},
      {"rmse", &ReportCell::rmse},
      {"pct", &ReportCell::mape_or_smape},
  };

  CompareTally tally;
  tally.compared = ia.size();
  for (const MetricField &mf : fields) {
    CompareTally::Line line;
    line.metric = mf.name;
    for (const auto &[key, ca] : ia) {
      const ReportCell *cb = ib.at(key);
      const double va = ca->*(mf.field);
      const double vb = cb->*(mf.field);
      line.cells.push_back({key.site, key.horizon_min, va, vb});
      if (va < vb)
        ++line.a_wins;
      else if (vb < va)
        ++line.b_wins;
      else
        ++line.ties;
    }
    tally.lines.push_back(std::move(line));
  }
  return tally;
}

} // namespace parkcast::metrics
