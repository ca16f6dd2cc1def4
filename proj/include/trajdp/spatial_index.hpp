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

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "trajdp/geodata.hpp"

namespace trajdp {

/// Voxel buckets over points embedded on the unit sphere. Chord length is a
/// monotone function of great-circle distance, so voxel shells give exact
/// pruning bounds; every reported distance is still a haversine_distance()
/// evaluation, so answers match brute force bit for bit.
class SphericalPointIndex {
 public:
  explicit SphericalPointIndex(std::span<const GeoPoint> points);

  std::size_t size() const { return points_.size(); }

  /// min over indexed p of haversine_distance(q, p). Requires size() > 0.
  double nearest_distance(const GeoPoint& q) const;

  /// Number of indexed p with haversine_distance(q, p) <= radius_m.
  std::size_t count_within(const GeoPoint& q, double radius_m) const;

 private:
  using Key = std::uint64_t;
  Key key_of(const Eigen::Vector3d& u) const;
  Key key_of(std::int64_t ix, std::int64_t iy, std::int64_t iz) const;
  Eigen::Vector3i cell_of(const Eigen::Vector3d& u) const;
  double brute_nearest(const GeoPoint& q) const;

  std::vector<GeoPoint> points_;
  std::vector<Eigen::Vector3d> units_;
  double cell_ = 1.0;
  std::unordered_map<Key, std::vector<std::uint32_t>> buckets_;
};

Eigen::Vector3d unit_vector(const GeoPoint& p);

}  // namespace trajdp
