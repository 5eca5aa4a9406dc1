#pragma once

#include <cstdint>
#include <vector>

#include "parkcast/data.hpp"
#include "parkcast/geo.hpp"

namespace parkcast::synth {

/// Knobs for the synthetic lot-occupancy generator. The process is
///   v(t+1) = coupling * (W v(t)) + (1 - coupling) * s(t) + e(t)
/// where W row-normalizes the graph adjacency over true neighbors,
/// s is a per-site daily sinusoid, and e is AR(1) noise, rounded to
/// nonnegative counts. Neighbor noise leaks into each site one step
/// later, so cross-site readings genuinely help one-step prediction,
/// and the AR noise makes longer horizons genuinely harder.
struct SynthParams {
  std::size_t n_steps = 2000;
  double coupling = 0.9;  // weight on the neighbor diffusion term
  double ar_phi = 0.7;    // AR(1) persistence of the noise
  double noise_sd = 2.0;  // innovation scale, in parking spaces
  int interval_min = 5;   // sampling interval (288 steps per day)
};

/// Eight synthetic lots on a 4 x 2 grid with ~0.2 km pitch, sized so the
/// default 0.35 km radius connects grid neighbors (diagonals included)
/// but not the long way across.
std::vector<geo::GeoPoint> grid_sites();

/// Runs the diffusion process over the graph's sites. Column order
/// follows graph.nodes; timestamps start 2016-07-01T00:00 on the
/// interval_min grid. Deterministic in (graph, params, seed).
data::TimeSeriesPanel generate_panel(const geo::ParkingGraph &graph,
                                     const SynthParams &params,
                                     std::uint64_t seed);

} // namespace parkcast::synth
