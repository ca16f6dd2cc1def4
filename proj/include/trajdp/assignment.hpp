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
#include <vector>

#include <Eigen/Core>

namespace trajdp {

struct Assignment {
  std::vector<std::size_t> row_to_col;
  double total_cost = 0.0;
};

/// Minimum-cost assignment of every row to a distinct column (rows <= cols),
/// Hungarian method with row/column potentials, O(rows^2 * cols).
Assignment solve_assignment(const Eigen::Ref<const Eigen::MatrixXd>& cost);

}  // namespace trajdp
