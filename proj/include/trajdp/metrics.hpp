// Copyright 2026 The trajdp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "trajdp/assignment.hpp"
#include "trajdp/geodata.hpp"
#include "trajdp/random.hpp"

namespace trajdp {

// ---------------------------------------------------------------------------
// Divergences and histograms

/// Jensen-Shannon divergence in bits. Inputs are nonnegative weights and are
/// normalized internally; 0 log 0 is taken as 0.
double jsd(const Eigen::Ref<const Eigen::VectorXd>& p, const Eigen::Ref<const Eigen::VectorXd>& q);

/// Cell of p on a g x g grid over box; row is the latitude bin. Points on the
/// upper edge fall into the last cell, points outside are clamped.
Eigen::Vector2i grid_cell(const GeoPoint& p, const BoundingBox& box, int g);

struct GridHistogram {
  int g = 0;
  BoundingBox bbox;
  Eigen::MatrixXd counts;  // g x g, counts(lat_bin, lon_bin)

  double total() const { return counts.sum(); }
};

GridHistogram grid_histogram(std::span<const GeoPoint> points, const BoundingBox& box, int g);
GridHistogram grid_histogram(const TrajectoryDataset& d, const BoundingBox& box, int g);

/// Box shared by a real/synthetic pair: the real box if set, else the
/// synthetic one, else the enclosing box of both.
BoundingBox shared_box(const TrajectoryDataset& real, const TrajectoryDataset& syn);

double grid_jsd(const TrajectoryDataset& real, const TrajectoryDataset& syn, int g = 64);
double grid_jsd(const TrajectoryDataset& real, const TrajectoryDataset& syn, const BoundingBox& box, int g = 64);

/// Equal-width histogram of values over [lo, hi]; hi lands in the last bin.
Eigen::VectorXd value_histogram(std::span<const double> values, double lo, double hi, int bins);

// ---------------------------------------------------------------------------
// Point-set metrics

/// Mean over random directions of the 1D Wasserstein-1 distance between the
/// projected samples. The larger set is subsampled to the size of the
/// smaller one.
double sliced_wasserstein(const NormalizedPoints& a, const NormalizedPoints& b, std::size_t n_projections, Rng& rng);

/// Exact symmetric Hausdorff distance in meters.
double hausdorff_points(std::span<const GeoPoint> a, std::span<const GeoPoint> b);

/// Same value by the O(|a| |b|) definition.
double hausdorff_points_brute(std::span<const GeoPoint> a, std::span<const GeoPoint> b);

struct RangeQueryConfig {
  std::size_t n_queries = 200;
  std::vector<double> radii_m{50.0, 100.0, 200.0, 500.0, 1000.0};
  double smoothing_fraction = 0.001;
};

/// Mean relative error of circular range counts, queries centered uniformly
/// over box.
double range_query_mre(std::span<const GeoPoint> real, std::span<const GeoPoint> syn, const BoundingBox& box,
                       const RangeQueryConfig& config, Rng& rng);

struct HotspotResult {
  double sdc = 0.0;
  std::size_t real_hotspots = 0;
  std::size_t syn_hotspots = 0;
  bool no_hotspots = false;
};

/// Cells whose count is strictly above the given percentile of the nonzero
/// cell counts, as flat row-major indices in ascending order.
std::vector<std::size_t> hotspot_cells(const GridHistogram& h, double percentile);

HotspotResult hotspot_sdc(std::span<const GeoPoint> real, std::span<const GeoPoint> syn, const BoundingBox& box,
                          int g = 128, double percentile = 95.0);

/// Linearly interpolated percentile of values (0..100).
double percentile_linear(std::vector<double> values, double percentile);

// ---------------------------------------------------------------------------
// Matching and per-trajectory metrics

/// cost(i, j) = mean over index k of haversine(real_i[k], syn_j[k]).
Eigen::MatrixXd trajectory_cost_matrix(const TrajectoryDataset& real, const TrajectoryDataset& syn);

/// row_to_col[i] is the synthetic trajectory paired with real trajectory i.
Assignment hungarian_match(const TrajectoryDataset& real, const TrajectoryDataset& syn);

double traj_hausdorff(const Trajectory& a, const Trajectory& b);
double haversine_norm(const Trajectory& a, const Trajectory& b);
double dtw(const Trajectory& a, const Trajectory& b);

double total_travel_distance(const Trajectory& t);
double trajectory_diameter(const Trajectory& t);

double ttd_jsd(const TrajectoryDataset& real, const TrajectoryDataset& syn, int bins = 55);
double diameter_jsd(const TrajectoryDataset& real, const TrajectoryDataset& syn, int bins = 55);
double trip_error(const TrajectoryDataset& real, const TrajectoryDataset& syn, int g = 16);
double trip_error(const TrajectoryDataset& real, const TrajectoryDataset& syn, const BoundingBox& box, int g = 16);

// ---------------------------------------------------------------------------
// Report

struct EvalConfig {
  std::uint64_t seed = 0;
  int grid_g = 64;
  std::size_t swd_projections = 100;
  std::size_t hausdorff_sample = 100000;
  RangeQueryConfig range;
  int hotspot_g = 128;
  double hotspot_percentile = 95.0;
  int hist_bins = 55;
  int trip_g = 16;
  std::optional<BoundingBox> bbox;
};

void validate(const EvalConfig& c);
nlohmann::json to_json(const EvalConfig& c);
EvalConfig eval_config_from_json(const nlohmann::json& j);

struct MetricReport {
  double jsd = 0.0;
  double swd = 0.0;
  double hd_points = 0.0;
  double range_mre = 0.0;
  double hotspot_sdc = 0.0;
  double hd_traj = 0.0;
  double haversine_norm = 0.0;
  double dtw = 0.0;
  double ttd_jsd = 0.0;
  double diameter_jsd = 0.0;
  double trip_error = 0.0;
  bool hotspot_warning = false;

  static constexpr std::size_t kFieldCount = 11;
  /// Scores in table column order.
  std::array<double, kFieldCount> values() const;
  static const std::array<std::string, kFieldCount>& column_names();
  static MetricReport from_values(const std::array<double, kFieldCount>& v);
};

std::string csv_header();
std::string csv_row(const std::string& case_id, const MetricReport& r);
nlohmann::json to_json(const MetricReport& r);
MetricReport metric_report_from_json(const nlohmann::json& j);

/// All eleven scores for a (real, synthetic) pair. Paired metrics use the
/// given pairing (pairing[i] = synthetic index for real i) or, if absent, a
/// minimum-cost matching.
MetricReport evaluate_pair(const TrajectoryDataset& real, const TrajectoryDataset& syn, const EvalConfig& config,
                           std::optional<std::span<const std::size_t>> pairing = std::nullopt);

std::vector<std::size_t> identity_pairing(std::size_t n);

}  // namespace trajdp
