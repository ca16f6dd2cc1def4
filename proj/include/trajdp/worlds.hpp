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

#include "trajdp/geodata.hpp"
#include "trajdp/random.hpp"

namespace trajdp {

/// Two dense activity centers inside one box. Each trajectory starts near a
/// center, drifts with a persistent heading and is then resampled to
/// `length` points. Nothing leaves the box: steps that would are reflected.
struct TwoClusterConfig {
  std::size_t count = 10000;
  std::size_t length = 32;
  BoundingBox bbox{41.10, -8.72, 41.24, -8.50};
  // Centers and spreads are fractions of the box spans.
  double center_a_lat = 0.30, center_a_lon = 0.30;
  double center_b_lat = 0.72, center_b_lon = 0.68;
  double spread = 0.05;
  double weight_a = 0.65;
  double step = 0.012;
  double turn_sd = 0.35;
};

TrajectoryDataset two_cluster_world(const TwoClusterConfig& config, Rng& rng);

}  // namespace trajdp
