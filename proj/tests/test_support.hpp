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

// Small generators shared by the unit tests.

#include <algorithm>
#include <cstddef>
#include <string>

#include "trajdp/geodata.hpp"
#include "trajdp/random.hpp"

namespace trajdp::testing {

inline const BoundingBox kTestBox{41.10, -8.72, 41.24, -8.50};

inline GeoPoint random_point(const BoundingBox& box, Rng& rng) {
  return {uniform_real(rng, box.lat_min, box.lat_max), uniform_real(rng, box.lon_min, box.lon_max)};
}

inline Trajectory random_trajectory(const std::string& id, std::size_t length, const BoundingBox& box, Rng& rng) {
  Trajectory t{id, {}};
  for (std::size_t k = 0; k < length; ++k) t.points.push_back(random_point(box, rng));
  return t;
}

// Short random walk, more trajectory-like than independent points.
inline Trajectory random_walk(const std::string& id, std::size_t length, const BoundingBox& box, Rng& rng) {
  Trajectory t{id, {random_point(box, rng)}};
  for (std::size_t k = 1; k < length; ++k) {
    GeoPoint p = t.points.back();
    p.lat = std::clamp(p.lat + uniform_real(rng, -0.004, 0.004), box.lat_min, box.lat_max);
    p.lon = std::clamp(p.lon + uniform_real(rng, -0.004, 0.004), box.lon_min, box.lon_max);
    t.points.push_back(p);
  }
  return t;
}

inline TrajectoryDataset random_dataset(std::size_t n, std::size_t length, Rng& rng,
                                        const BoundingBox& box = kTestBox, bool walks = true) {
  TrajectoryDataset d;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string id = "t" + std::to_string(i);
    d.trajectories.push_back(walks ? random_walk(id, length, box, rng) : random_trajectory(id, length, box, rng));
  }
  d.fixed_length = length;
  d.bbox = box;
  return d;
}

}  // namespace trajdp::testing
