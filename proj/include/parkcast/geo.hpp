#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "parkcast/tensor.hpp"

namespace parkcast::geo {

inline constexpr double kDefaultEpsilonKm = 0.35;
inline constexpr double kEarthRadiusKm = 6371.0;

struct GeoPoint {
  std::string site_id;
  double lat = 0.0; // degrees, [-90, 90]
  double lon = 0.0; // degrees, [-180, 180]
};

/// Throws ValidationError when a coordinate is outside its range.
void validate_point(const GeoPoint &p);

/// Great-circle distance in the radius's unit (kilometers by default).
double haversine_distance(const GeoPoint &p1, const GeoPoint &p2,
                          double radius_km = kEarthRadiusKm);

/// Edge weighting applied to a pair within the distance threshold.
/// Distance is the faithful default (weight = d); gaussian uses
/// exp(-(d/epsilon)^2); binary uses 1. The diagonal stays zero in every
/// mode — self-loops enter via normalization.
enum class WeightMode { Distance, Gaussian, Binary };

WeightMode weight_mode_from_string(const std::string &name);
std::string to_string(WeightMode mode);

/// Nodes ordered by ascending site_id; A and A_hat share that order.
struct ParkingGraph {
  std::vector<GeoPoint> nodes;
  ad::Tensor A;     // raw thresholded adjacency, zero diagonal
  ad::Tensor A_hat; // symmetric-normalized adjacency with self-loops
  double epsilon_km = kDefaultEpsilonKm;
  double radius_km = kEarthRadiusKm;
  WeightMode mode = WeightMode::Distance;

  std::size_t size() const { return nodes.size(); }
  std::size_t index_of(const std::string &site_id) const;
};

/// Thresholded adjacency over points already sorted by site_id.
ad::Tensor build_adjacency(const std::vector<GeoPoint> &points,
                           double epsilon_km, double radius_km,
                           WeightMode mode = WeightMode::Distance);

/// D^(-1/2) (A + I) D^(-1/2) with the self-loop-inclusive degree
/// D_ii = sum_j (A_ij + I_ij). Input must be square, symmetric and
/// nonnegative.
ad::Tensor normalize_adjacency(const ad::Tensor &A);

/// Sorts the points, validates them, and assembles the full graph. A
/// threshold of exactly zero yields the edgeless graph (A all zeros,
/// A_hat the identity) rather than an error.
ParkingGraph build_graph(std::vector<GeoPoint> points,
                         double epsilon_km = kDefaultEpsilonKm,
                         double radius_km = kEarthRadiusKm,
                         WeightMode mode = WeightMode::Distance);

/// Reads a `site_id,lat,lon` CSV (header required).
std::vector<GeoPoint> load_sites_csv(const std::string &path);

/// Writes the `site_id,lat,lon` CSV that load_sites_csv reads.
void save_sites_csv(const std::vector<GeoPoint> &points,
                    const std::string &path);

/// Writes one labeled matrix per file with a leading metadata comment.
void save_graph_csv(const ParkingGraph &graph, const std::string &a_path,
                    const std::string &a_hat_path);

} // namespace parkcast::geo
