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

#include "trajdp/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace trajdp {

namespace {

constexpr double kMinCell = 2e-6;
constexpr std::int64_t kOffset = std::int64_t{1} << 20;
// Slack on chord comparisons, far above rounding of unit-vector coordinates.
constexpr double kChordSlack = 1e-12;

}  // namespace

Eigen::Vector3d unit_vector(const GeoPoint& p) {
  constexpr double k = std::numbers::pi / 180.0;
  const double phi = p.lat * k;
  const double lambda = p.lon * k;
  return {std::cos(phi) * std::cos(lambda), std::cos(phi) * std::sin(lambda), std::sin(phi)};
}

SphericalPointIndex::SphericalPointIndex(std::span<const GeoPoint> points) : points_(points.begin(), points.end()) {
  if (points_.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("SphericalPointIndex: too many points");
  }
  units_.reserve(points_.size());
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (const auto& p : points_) {
    units_.push_back(unit_vector(p));
    lo = lo.cwiseMin(units_.back());
    hi = hi.cwiseMax(units_.back());
  }
  if (!points_.empty()) {
    // Points lie on a surface patch: size cells from the two largest extents
    // so that a cell holds a handful of points on average.
    Eigen::Vector3d ext = (hi - lo).cwiseMax(kMinCell);
    std::sort(ext.data(), ext.data() + 3);
    const double area = ext(1) * ext(2);
    cell_ = std::clamp(std::sqrt(4.0 * area / static_cast<double>(points_.size())), kMinCell, 2.0);
  }
  for (std::size_t i = 0; i < units_.size(); ++i) buckets_[key_of(units_[i])].push_back(static_cast<std::uint32_t>(i));
}

Eigen::Vector3i SphericalPointIndex::cell_of(const Eigen::Vector3d& u) const {
  return {static_cast<int>(std::floor(u.x() / cell_)), static_cast<int>(std::floor(u.y() / cell_)),
          static_cast<int>(std::floor(u.z() / cell_))};
}

SphericalPointIndex::Key SphericalPointIndex::key_of(std::int64_t ix, std::int64_t iy, std::int64_t iz) const {
  return (static_cast<Key>(ix + kOffset) << 42) | (static_cast<Key>(iy + kOffset) << 21) |
         static_cast<Key>(iz + kOffset);
}

SphericalPointIndex::Key SphericalPointIndex::key_of(const Eigen::Vector3d& u) const {
  const Eigen::Vector3i c = cell_of(u);
  return key_of(c.x(), c.y(), c.z());
}

double SphericalPointIndex::brute_nearest(const GeoPoint& q) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : points_) best = std::min(best, haversine_distance(q, p));
  return best;
}

double SphericalPointIndex::nearest_distance(const GeoPoint& q) const {
  if (points_.empty()) throw std::invalid_argument("nearest_distance: empty index");
  const Eigen::Vector3d u = unit_vector(q);
  const Eigen::Vector3i c = cell_of(u);
  double best_chord = std::numeric_limits<double>::infinity();
  double best_dist = std::numeric_limits<double>::infinity();
  // Past this many shells a linear scan is cheaper than probing empty cells.
  const double shell_budget = 2.0 * static_cast<double>(buckets_.size()) + 64.0;
  double probed = 0.0;
  auto visit = [&](std::int64_t ix, std::int64_t iy, std::int64_t iz) {
    auto it = buckets_.find(key_of(ix, iy, iz));
    if (it == buckets_.end()) return;
    for (auto idx : it->second) {
      best_chord = std::min(best_chord, (units_[idx] - u).norm());
      best_dist = std::min(best_dist, haversine_distance(q, points_[idx]));
    }
  };
  for (std::int64_t r = 0;; ++r) {
    for (std::int64_t dx = -r; dx <= r; ++dx) {
      for (std::int64_t dy = -r; dy <= r; ++dy) {
        const bool edge = std::abs(dx) == r || std::abs(dy) == r;
        if (edge) {
          for (std::int64_t dz = -r; dz <= r; ++dz) visit(c.x() + dx, c.y() + dy, c.z() + dz);
        } else {
          visit(c.x() + dx, c.y() + dy, c.z() - r);
          if (r > 0) visit(c.x() + dx, c.y() + dy, c.z() + r);
        }
      }
    }
    if (best_dist == 0.0) return 0.0;
    // Unvisited points are more than r * cell_ away in chord length.
    if (best_chord * (1.0 + 1e-9) + kChordSlack <= static_cast<double>(r) * cell_) return best_dist;
    probed += 24.0 * static_cast<double>(r * r) + 2.0;
    if (probed > shell_budget) return brute_nearest(q);
  }
}

std::size_t SphericalPointIndex::count_within(const GeoPoint& q, double radius_m) const {
  if (!(radius_m >= 0.0)) throw std::invalid_argument("count_within: radius must be >= 0");
  if (points_.empty()) return 0;
  const double half_angle = std::min(radius_m / (2.0 * kEarthRadiusMeters), std::numbers::pi / 2.0);
  const double chord = 2.0 * std::sin(half_angle) + kChordSlack;
  const Eigen::Vector3d u = unit_vector(q);
  const Eigen::Vector3i lo = cell_of(u.array() - chord);
  const Eigen::Vector3i hi = cell_of(u.array() + chord);
  const double cube = static_cast<double>(hi.x() - lo.x() + 1) * static_cast<double>(hi.y() - lo.y() + 1) *
                      static_cast<double>(hi.z() - lo.z() + 1);
  std::size_t count = 0;
  auto consider = [&](std::uint32_t idx) {
    if (haversine_distance(q, points_[idx]) <= radius_m) ++count;
  };
  if (cube > static_cast<double>(buckets_.size())) {
    // Cheaper to walk the occupied buckets than the query cube.
    for (const auto& [key, members] : buckets_) {
      const Eigen::Vector3d& any = units_[members.front()];
      const Eigen::Vector3i cc = cell_of(any);
      if ((cc.array() < lo.array()).any() || (cc.array() > hi.array()).any()) continue;
      for (auto idx : members) consider(idx);
    }
    return count;
  }
  for (std::int64_t ix = lo.x(); ix <= hi.x(); ++ix) {
    for (std::int64_t iy = lo.y(); iy <= hi.y(); ++iy) {
      for (std::int64_t iz = lo.z(); iz <= hi.z(); ++iz) {
        auto it = buckets_.find(key_of(ix, iy, iz));
        if (it == buckets_.end()) continue;
        for (auto idx : it->second) consider(idx);
      }
    }
  }
  return count;
}

}  // namespace trajdp
