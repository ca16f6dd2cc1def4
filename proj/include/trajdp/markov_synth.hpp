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

// Grid-and-Markov-chain DP trajectory synthesizer: density-aware grid,
// noisy first/second-order transition counts, random-walk generation.

#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "trajdp/dp_core.hpp"
#include "trajdp/geodata.hpp"
#include "trajdp/random.hpp"

namespace trajdp {

struct SynthConfig {
  /// +infinity disables all noise (non-private reference runs).
  double eps_total = 1.0;
  /// Fractions of eps_total for (grid, first order, second order).
  std::array<double, 3> budget_split{0.2, 0.4, 0.4};
  int g1 = 8;
  int g2 = 4;
  /// A level-1 cell is subdivided when its noisy count exceeds
  /// theta * (noisy total / g1^2).
  double theta = 2.0;
  /// 0 selects the default 4 * g1.
  std::size_t max_walk_length = 0;

  std::size_t walk_cap() const { return max_walk_length == 0 ? static_cast<std::size_t>(4 * g1) : max_walk_length; }
};

void validate(const SynthConfig& c);
nlohmann::json to_json(const SynthConfig& c);
SynthConfig synth_config_from_json(const nlohmann::json& j);

/// Epsilons of the three stages. The second-order share is computed as the
/// remainder so the three parts sum back to eps_total exactly.
std::array<double, 3> split_budget(const SynthConfig& c);

/// g1 x g1 cells over the box, some refined into g2 x g2 children. Leaves
/// are numbered level-1 cell by level-1 cell in row-major order (row =
/// latitude band), children row-major inside their parent.
class AdaptiveGrid {
 public:
  AdaptiveGrid(BoundingBox bbox, int g1, int g2, std::vector<bool> subdivided);

  const BoundingBox& bbox() const { return bbox_; }
  int g1() const { return g1_; }
  int g2() const { return g2_; }
  std::size_t leaf_count() const { return leaf_count_; }
  bool is_subdivided(std::size_t level1_cell) const { return subdivided_.at(level1_cell); }
  std::size_t subdivided_count() const;

  std::size_t level1_cell_of(const GeoPoint& p) const;
  std::size_t leaf_of(const GeoPoint& p) const;
  BoundingBox leaf_region(std::size_t leaf) const;

  /// Noisy level-1 counts the subdivision decision was made from.
  const std::vector<double>& noisy_level1_counts() const { return noisy_counts_; }
  void set_noisy_level1_counts(std::vector<double> counts) { noisy_counts_ = std::move(counts); }
  /// Budget spent building the grid.
  const PrivacyBudget& budget() const { return budget_; }
  void set_budget(const PrivacyBudget& b) { budget_ = b; }

  nlohmann::json to_json() const;
  static AdaptiveGrid from_json(const nlohmann::json& j);

 private:
  std::pair<int, int> level1_row_col(const GeoPoint& p) const;

  BoundingBox bbox_;
  int g1_;
  int g2_;
  std::vector<bool> subdivided_;
  std::vector<std::size_t> first_leaf_;
  std::size_t leaf_count_ = 0;
  std::vector<double> noisy_counts_;
  PrivacyBudget budget_{0.0, 0.0, Adjacency::replace_one, PrivacyUnit::trajectory};
};

/// States are the grid leaves 0..S-1 plus START = S and END = S+1.
/// Stored counts are the raw noisy values; negatives clamp to zero only
/// when probabilities are formed.
struct MarkovModel {
  std::size_t leaf_count = 0;
  Eigen::MatrixXd first_order;  // (S+2) x (S+2), row = current state
  /// (previous, current) -> counts over the next state (length S+2).
  std::map<std::pair<std::size_t, std::size_t>, Eigen::VectorXd> second_order;
  PrivacyBudget budget;

  std::size_t start_state() const { return leaf_count; }
  std::size_t end_state() const { return leaf_count + 1; }
  std::size_t state_count() const { return leaf_count + 2; }

  nlohmann::json to_json() const;
  static MarkovModel from_json(const nlohmann::json& j);
};

/// Level-1 point counts with Laplace noise of scale 2L/eps_grid (one
/// trajectory of fixed length L moves at most 2L unit counts under
/// replace-one), then threshold-based subdivision.
AdaptiveGrid build_grid(const TrajectoryDataset& d, double eps_grid, const SynthConfig& config, Rng& rng);

/// Leaf sequence of a trajectory with consecutive duplicates collapsed.
std::vector<std::size_t> cell_sequence(const Trajectory& t, const AdaptiveGrid& grid);

/// Noisy transition tables, Laplace scale 2(L+1)/eps per table. Second-order
/// contexts are the (previous, current) pairs whose released first-order
/// count exceeds three first-order noise scales; selecting them is
/// post-processing of the first release.
MarkovModel fit_markov_dp(const TrajectoryDataset& d, const AdaptiveGrid& grid, double eps_1st, double eps_2nd,
                          Rng& rng);

using CellPath = std::vector<std::size_t>;

/// Random walks from START until END or `max_walk_length` cells.
std::vector<CellPath> generate_walks(const MarkovModel& model, std::size_t count, std::size_t max_walk_length,
                                     Rng& rng);

/// One uniform point per visited cell, then resampling to `target_length`.
TrajectoryDataset to_trajectories(const std::vector<CellPath>& paths, const AdaptiveGrid& grid,
                                  std::size_t target_length, Rng& rng);

struct SynthResult {
  TrajectoryDataset dataset;
  AdaptiveGrid grid;
  MarkovModel model;
};

/// build_grid -> fit_markov_dp -> generate_walks -> to_trajectories.
SynthResult synthesize_markov(const TrajectoryDataset& train, const SynthConfig& config, std::size_t count,
                              std::size_t target_length, Rng& rng);

}  // namespace trajdp
