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


#include "trajdp/worlds.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace trajdp {

namespace {

// Reflect v into [0, 1].
double reflect01(double v) {
  v = std::fmod(std::abs(v), 2.0);
  return v > 1.0 ? 2.0 - v : v;
}

}  // namespace

TrajectoryDataset two_cluster_world(const TwoClusterConfig& config, Rng& rng) {
  validate(config.bbox);
  if (config.length < 2) throw std::invalid_argument("two_cluster_world: length must be >= 2");
  if (!(config.weight_a >= 0.0 && config.weight_a <= 1.0)) {
    throw std::invalid_argument("two_cluster_world: weight_a outside [0, 1]");
  }
  if (!(config.spread >= 0.0) || !(config.step >= 0.0) || !(config.turn_sd >= 0.0)) {
    throw std::invalid_argument("two_cluster_world: spread, step and turn_sd must be >= 0");
  }
  const BoundingBox& box = config.bbox;
  std::normal_distribution<double> normal(0.0, 1.0);
  TrajectoryDataset out;
  out.trajectories.reserve(config.count);
  for (std::size_t i = 0; i < config.count; ++i) {
    const bool a = uniform01(rng) < config.weight_a;
    double u = reflect01((a ? config.center_a_lat : config.center_b_lat) + config.spread * normal(rng));
    double v = reflect01((a ? config.center_a_lon : config.center_b_lon) + config.spread * normal(rng));
    double heading = uniform_real(rng, 0.0, 2.0 * std::numbers::pi);
    // Raw walks get a random duration; resampling then fixes the length.
    const std::size_t steps = 4 + uniform_index(rng, 3 * config.length);
    Trajectory t;
    t.id = "w" + std::to_string(i);
    t.points.reserve(steps + 1);
    t.points.push_back({box.lat_min + u * box.lat_span(), box.lon_min + v * box.lon_span()});
    for (std::size_t k = 0; k < steps; ++k) {
      heading += config.turn_sd * normal(rng);
      u = reflect01(u + config.step * std::sin(heading));
      v = reflect01(v + config.step * std::cos(heading));
      t.points.push_back({box.lat_min + u * box.lat_span(), box.lon_min + v * box.lon_span()});
    }
    out.trajectories.push_back(resample_to_length(t, config.length));
  }
  out.fixed_length = config.length;
  out.bbox = box;
  return out;
}

}  // namespace trajdp
