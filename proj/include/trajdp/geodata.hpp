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

// Trajectory data model, geodesic distance, preprocessing and file I/O.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace trajdp {

/// Mean Earth radius in meters used by every distance in the library.
inline constexpr double kEarthRadiusMeters = 6371000.0;

struct GeoPoint {
  double lat = 0.0;  // degrees, [-90, 90]
  double lon = 0.0;  // degrees, [-180, 180]

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

bool is_valid(const GeoPoint& p);

struct Trajectory {
  std::string id;
  std::vector<GeoPoint> points;

  std::size_t size() const { return points.size(); }
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct BoundingBox {
  double lat_min = 0.0;
  double lon_min = 0.0;
  double lat_max = 0.0;
  double lon_max = 0.0;

  /// Closed box; points on the boundary count as inside.
  bool contains(const GeoPoint& p) const {
    return p.lat >= lat_min && p.lat <= lat_max && p.lon >= lon_min && p.lon <= lon_max;
  }
  double lat_span() const { return lat_max - lat_min; }
  double lon_span() const { return lon_max - lon_min; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Throws std::invalid_argument unless lat_min < lat_max and lon_min < lon_max.
void validate(const BoundingBox& box);

/// Named preprocessing presets: a fixed box plus the fixed trajectory length.
struct DatasetPreset {
  std::string name;
  BoundingBox bbox;
  std::size_t length;
};

DatasetPreset porto_preset();
DatasetPreset geolife_preset();
/// Looks up "porto" or "geolife"; std::nullopt for anything else.
std::optional<DatasetPreset> find_preset(std::string_view name);

struct TrajectoryDataset {
  std::vector<Trajectory> trajectories;
  std::optional<std::size_t> fixed_length;
  std::optional<BoundingBox> bbox;

  std::size_t size() const { return trajectories.size(); }
  bool empty() const { return trajectories.empty(); }
  std::size_t point_count() const;

  friend bool operator==(const TrajectoryDataset&, const TrajectoryDataset&) = default;
};

/// Checks every invariant of the dataset (valid points, fixed length, box
/// containment). Throws std::invalid_argument on the first violation.
void validate(const TrajectoryDataset& d);

/// All points of the dataset in trajectory order.
std::vector<GeoPoint> flatten_points(const TrajectoryDataset& d);

/// Smallest box containing every point of both datasets. Degenerate
/// extents are widened by a tiny margin so the box stays valid.
BoundingBox enclosing_box(const TrajectoryDataset& a, const TrajectoryDataset& b);

struct FoldSplit {
  std::size_t fold_index = 0;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

/// Great-circle distance in meters (haversine formula).
double haversine_distance(const GeoPoint& a, const GeoPoint& b);

/// Linear interpolation over the point-index parameterization. Endpoints
/// are copied exactly.
Trajectory resample_to_length(const Trajectory& t, std::size_t target_length);

/// Resamples every trajectory and records the fixed length.
TrajectoryDataset resample_dataset(const TrajectoryDataset& d, std::size_t target_length);

/// Keeps only trajectories with every point inside the box; the result's
/// bbox is set to `box`.
TrajectoryDataset filter_bbox(const TrajectoryDataset& d, const BoundingBox& box);

/// Filter to the preset box, drop single-point trajectories, resample.
TrajectoryDataset preprocess(const TrajectoryDataset& d, const BoundingBox& box, std::size_t length);

/// One row per point, columns (lat, lon) mapped affinely onto [-1, 1].
using NormalizedPoints = Eigen::Matrix<double, Eigen::Dynamic, 2>;

Eigen::Vector2d normalize_point(const GeoPoint& p, const BoundingBox& box);
GeoPoint denormalize_point(const Eigen::Ref<const Eigen::Vector2d>& u, const BoundingBox& box);

/// Per-trajectory normalized coordinates. Throws if any point is outside.
std::vector<NormalizedPoints> normalize_coords(const TrajectoryDataset& d, const BoundingBox& box);
/// Inverse of normalize_coords; ids are taken from `ids` when given.
TrajectoryDataset denormalize_coords(const std::vector<NormalizedPoints>& coords, const BoundingBox& box,
                                     std::span<const std::string> ids = {});

NormalizedPoints normalize_points(std::span<const GeoPoint> points, const BoundingBox& box);

/// k folds, shuffled with `seed`; fold sizes differ by at most one.
std::vector<FoldSplit> kfold_split(const TrajectoryDataset& d, std::size_t k, std::uint64_t seed);

/// Trajectories whose id appears in `ids`, in the order of `ids`.
TrajectoryDataset select_ids(const TrajectoryDataset& d, std::span<const std::string> ids);
TrajectoryDataset select_indices(const TrajectoryDataset& d, std::span<const std::size_t> indices);

enum class FileFormat { jsonl, csv };

/// ".csv" maps to csv, everything else to jsonl.
FileFormat format_from_path(std::string_view path);

/// Malformed input; carries the 1-based line number of the offending row.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

TrajectoryDataset parse_dataset(std::string_view text, FileFormat format);
std::string serialize_dataset(const TrajectoryDataset& d, FileFormat format);

TrajectoryDataset load_dataset(const std::string& path, FileFormat format);
TrajectoryDataset load_dataset(const std::string& path);
void save_dataset(const TrajectoryDataset& d, const std::string& path, FileFormat format);
void save_dataset(const TrajectoryDataset& d, const std::string& path);

}  // namespace trajdp
