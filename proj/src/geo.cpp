#include "parkcast/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_set>

#include "parkcast/error.hpp"
#include "parkcast/io.hpp"

namespace parkcast::geo {

using ad::Shape;
using ad::Tensor;

void validate_point(const GeoPoint &p) {
  if (!std::isfinite(p.lat) || p.lat < -90.0 || p.lat > 90.0)
    throw ValidationError("site '" + p.site_id + "': latitude " +
                          io::fmt_double(p.lat) + " outside [-90, 90]");
  if (!std::isfinite(p.lon) || p.lon < -180.0 || p.lon > 180.0)
    throw ValidationError("site '" + p.site_id + "': longitude " +
                          io::fmt_double(p.lon) + " outside [-180, 180]");
}

double haversine_distance(const GeoPoint &p1, const GeoPoint &p2,
                          double radius_km) {
  validate_point(p1);
  validate_point(p2);
  if (!(radius_km > 0.0))
    throw ValidationError("haversine: radius must be positive");

  constexpr double deg = std::numbers::pi / 180.0;
  // Half-angle differences, in radians.
  const double a = (p1.lat - p2.lat) * deg / 2.0;
  const double b = (p1.lon - p2.lon) * deg / 2.0;
  const double s = std::sin(a) * std::sin(a) +
                   std::cos(p1.lat * deg) * std::cos(p2.lat * deg) *
                       std::sin(b) * std::sin(b);
  return 2.0 * radius_km * std::asin(std::min(1.0, std::sqrt(s)));
}

WeightMode weight_mode_from_string(const std::string &name) {
  if (name == "distance")
    return WeightMode::Distance;
  if (name == "gaussian")
    return WeightMode::Gaussian;
  if (name == "binary")
    return WeightMode::Binary;
  throw ConfigError("unknown weight mode '" + name +
                    "' (expected distance, gaussian or binary)");
}

std::string to_string(WeightMode mode) {
  switch (mode) {
  case WeightMode::Distance:
    return "distance";
  case WeightMode::Gaussian:
    return "gaussian";
  case WeightMode::Binary:
    return "binary";
  }
  throw ContractError("unknown WeightMode value");
}

std::size_t ParkingGraph::index_of(const std::string &site_id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].site_id == site_id)
      return i;
  throw ValidationError("unknown site '" + site_id + "'");
}

Tensor build_adjacency(const std::vector<GeoPoint> &points, double epsilon_km,
                       double radius_km, WeightMode mode) {
  if (points.empty())
    throw ValidationError("adjacency: need at least one site");
  if (!(epsilon_km > 0.0))
    throw ValidationError("adjacency: epsilon must be positive");

  const std::size_t n = points.size();
  Tensor a(Shape::mat(n, n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = haversine_distance(points[i], points[j], radius_km);
      if (d > epsilon_km)
        continue;
      double w = d;
      switch (mode) {
      case WeightMode::Distance:
        break;
      case WeightMode::Gaussian:
        w = std::exp(-(d / epsilon_km) * (d / epsilon_km));
        break;
      case WeightMode::Binary:
        w = 1.0;
        break;
      }
      a.at(i, j) = w;
      a.at(j, i) = w;
    }
  }
  return a;
}

Tensor normalize_adjacency(const Tensor &A) {
  const Shape &s = A.shape();
  if (s.rank != 2 || s.rows() != s.cols())
    throw ValidationError("normalize: adjacency must be square, got " + s.str());
  const std::size_t n = s.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (A.at(i, j) < 0.0)
        throw ValidationError("normalize: negative weight at (" +
                              std::to_string(i) + "," + std::to_string(j) + ")");
      if (A.at(i, j) != A.at(j, i))
        throw ValidationError("normalize: adjacency not symmetric at (" +
                              std::to_string(i) + "," + std::to_string(j) + ")");
    }

  // Self-loop-inclusive degree: d_i = 1 + sum_j A_ij >= 1.
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 1.0;
    for (std::size_t j = 0; j < n; ++j)
      deg += A.at(i, j);
    inv_sqrt[i] = 1.0 / std::sqrt(deg);
  }

  Tensor out(Shape::mat(n, n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double with_loop = A.at(i, j) + (i == j ? 1.0 : 0.0);
      out.at(i, j) = inv_sqrt[i] * with_loop * inv_sqrt[j];
    }
  return out;
}

ParkingGraph build_graph(std::vector<GeoPoint> points, double epsilon_km,
                         double radius_km, WeightMode mode) {
  for (const GeoPoint &p : points)
    validate_point(p);
  std::sort(points.begin(), points.end(),
            [](const GeoPoint &a, const GeoPoint &b) {
              return a.site_id < b.site_id;
            });
  for (std::size_t i = 1; i < points.size(); ++i)
    if (points[i].site_id == points[i - 1].site_id)
      throw ValidationError("duplicate site '" + points[i].site_id + "'");

  ParkingGraph g;
  if (epsilon_km == 0.0) {
    // A zero threshold is a meaningful degenerate request: no pair
    // qualifies, the adjacency is all zeros and normalization reduces to
    // the identity (self-loops only). build_adjacency itself requires a
    // positive threshold, so the matrix is assembled here.
    if (points.empty())
      throw ValidationError("adjacency: need at least one site");
    g.A = Tensor(Shape::mat(points.size(), points.size()));
  } else {
    g.A = build_adjacency(points, epsilon_km, radius_km, mode);
  }
  g.A_hat = normalize_adjacency(g.A);
  g.nodes = std::move(points);
  g.epsilon_km = epsilon_km;
  g.radius_km = radius_km;
  g.mode = mode;
  return g;
}

std::vector<GeoPoint> load_sites_csv(const std::string &path) {
  const auto lines = io::split_lines(io::read_file(path));
  if (lines.empty())
    throw ValidationError(path + ": empty sites file");
  const auto header = io::split_csv(lines[0]);
  if (header != std::vector<std::string>{"site_id", "lat", "lon"})
    throw ValidationError(path + ": expected header 'site_id,lat,lon', got '" +
                          lines[0] + "'");

  std::vector<GeoPoint> points;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty())
      continue;
    const auto fields = io::split_csv(lines[i]);
    if (fields.size() != 3)
      throw ValidationError(path + " line " + std::to_string(i + 1) +
                            ": expected 3 fields, got " +
                            std::to_string(fields.size()));
    const std::string where = path + " line " + std::to_string(i + 1);
    GeoPoint p{fields[0], io::parse_double(fields[1], where + " lat"),
               io::parse_double(fields[2], where + " lon")};
    if (p.site_id.empty())
      throw ValidationError(where + ": empty site_id");
    validate_point(p);
    points.push_back(std::move(p));
  }
  if (points.empty())
    throw ValidationError(path + ": no sites");
  return points;
}

void save_sites_csv(const std::vector<GeoPoint> &points,
                    const std::string &path) {
  if (points.empty())
    throw ValidationError("save_sites_csv: no sites");
  std::string out = "site_id,lat,lon\n";
  for (const GeoPoint &p : points) {
    validate_point(p);
    out += p.site_id;
    out += ',';
    out += io::fmt_double(p.lat);
    out += ',';
    out += io::fmt_double(p.lon);
    out += '\n';
  }
  io::write_file_atomic(path, out);
}

namespace {

std::string matrix_csv(const ParkingGraph &g, const Tensor &m) {
  std::string out = "# epsilon_km=" + io::fmt_double(g.epsilon_km) +
                    " radius_km=" + io::fmt_double(g.radius_km) +
                    " weight_mode=" + to_string(g.mode) + "\n";
  out += "site_id";
  for (const auto &p : g.nodes)
    out += "," + p.site_id;
  out += "\n";
  for (std::size_t i = 0; i < g.size(); ++i) {
    out += g.nodes[i].site_id;
    for (std::size_t j = 0; j < g.size(); ++j)
      out += "," + io::fmt_double(m.at(i, j));
    out += "\n";
  }
  return out;
}

} // namespace

void save_graph_csv(const ParkingGraph &graph, const std::string &a_path,
                    const std::string &a_hat_path) {
  io::write_file_atomic(a_path, matrix_csv(graph, graph.A));
  io::write_file_atomic(a_hat_path, matrix_csv(graph, graph.A_hat));
}

} // namespace parkcast::geo
