#include "parkcast/synth.hpp"

#include <cmath>

#include "parkcast/error.hpp"
#include "parkcast/rng.hpp"

namespace parkcast::synth {

using ad::Shape;
using ad::Tensor;

std::vector<geo::GeoPoint> grid_sites() {
  // 0.2 km pitch at latitude ~34: 0.0018086 deg lat, 0.0021687 deg lon.
  constexpr double kBaseLat = 34.0135;
  constexpr double kBaseLon = -118.4985;
  constexpr double kDLat = 0.0018086;
  constexpr double kDLon = 0.0021687;
  std::vector<geo::GeoPoint> sites;
  sites.reserve(8);
  for (int row = 0; row < 2; ++row)
    for (int col = 0; col < 4; ++col) {
      const int k = row * 4 + col + 1;
      sites.push_back(geo::GeoPoint{"st" + std::to_string(k),
                                    kBaseLat + row * kDLat,
                                    kBaseLon + col * kDLon});
    }
  return sites;
}

namespace {

// Standard normal via Box-Muller on the portable uniform stream.
double gaussian(Rng &rng) {
  double u1 = rng.uniform01();
  while (u1 <= 0.0)
    u1 = rng.uniform01();
  const double u2 = rng.uniform01();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.141592653589793 * u2);
}

} // namespace

data::TimeSeriesPanel generate_panel(const geo::ParkingGraph &graph,
                                     const SynthParams &params,
                                     std::uint64_t seed) {
  const std::size_t n = graph.size();
  if (n == 0)
    throw ContractError("generate_panel: empty graph");
  if (params.n_steps < 2)
    throw ContractError("generate_panel: need at least two steps");
  if (params.interval_min < 1)
    throw ContractError("generate_panel: interval must be positive");
  if (!(params.coupling >= 0.0 && params.coupling <= 1.0))
    throw ContractError("generate_panel: coupling must lie in [0, 1]");
  if (!(params.ar_phi >= 0.0 && params.ar_phi < 1.0))
    throw ContractError("generate_panel: ar_phi must lie in [0, 1)");
  if (!(params.noise_sd >= 0.0))
    throw ContractError("generate_panel: noise_sd must be >= 0");

  // Row-normalized neighbor weights from the raw adjacency: each site
  // mixes the current readings of its true neighbors.
  std::vector<double> w(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      row_sum += graph.A.at(i, j);
    if (row_sum <= 0.0)
      throw ContractError("generate_panel: site " + graph.nodes[i].site_id +
                          " has no neighbors; widen the radius");
    for (std::size_t j = 0; j < n; ++j)
      w[i * n + j] = graph.A.at(i, j) / row_sum;
  }

  // Per-site level and phase: distinct but reproducible across runs.
  // Phases are staggered within ~2 radians; a full-circle spread would
  // put adjacent sites in anti-phase and diffusion would cancel the
  // daily cycle instead of propagating it.
  std::vector<double> level(n), phase(n);
  for (std::size_t j = 0; j < n; ++j) {
    level[j] = 18.0 + 4.0 * static_cast<double>((j * 7) % 5);
    phase[j] = 0.3 * static_cast<double>(j);
  }
  const double steps_per_day = 1440.0 / params.interval_min;

  Rng rng(seed);
  std::vector<double> v(n), noise(n, 0.0), next(n);
  for (std::size_t j = 0; j < n; ++j)
    v[j] = level[j] * (0.55 + 0.35 * std::sin(phase[j]));

  data::TimeSeriesPanel panel;
  panel.values = Tensor(Shape::mat(params.n_steps, n));
  panel.interval_min = params.interval_min;
  panel.timestamps.reserve(params.n_steps);
  panel.site_order.reserve(n);
  for (const geo::GeoPoint &p : graph.nodes)
    panel.site_order.push_back(p.site_id);

  const std::int64_t step_s = 60LL * params.interval_min;
  for (std::size_t t = 0; t < params.n_steps; ++t) {
    panel.timestamps.push_back(
        io::Timestamp{1467331200LL + step_s * static_cast<std::int64_t>(t)});
    for (std::size_t j = 0; j < n; ++j)
      panel.values.at(t, j) = std::max(0.0, std::round(v[j]));

    for (std::size_t j = 0; j < n; ++j) {
      double diffused = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        diffused += w[j * n + k] * v[k];
      const double season =
          level[j] *
          (0.55 + 0.35 * std::sin(2.0 * 3.141592653589793 *
                                      static_cast<double>(t) / steps_per_day +
                                  phase[j]));
      noise[j] = params.ar_phi * noise[j] + params.noise_sd * gaussian(rng);
      next[j] = params.coupling * diffused +
                (1.0 - params.coupling) * season + noise[j];
    }
    v = next;
  }
  return panel;
}

} // namespace parkcast::synth
