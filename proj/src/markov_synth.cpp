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

#include "trajdp/markov_synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace trajdp {

namespace {

// Laplace noise that vanishes for an infinite epsilon.
double noise(double sensitivity, double epsilon, Rng& rng) {
  if (std::isinf(epsilon)) return 0.0;
  return laplace_sample(sensitivity / epsilon, rng);
}

PrivacyBudget pure_budget(double epsilon) { return {epsilon, 0.0, Adjacency::replace_one, PrivacyUnit::trajectory}; }

std::size_t fixed_length_of(const TrajectoryDataset& d) {
  if (!d.fixed_length) throw std::invalid_argument("markov synthesizer needs a dataset with a fixed length");
  return *d.fixed_length;
}

// Cumulative clamped mass of a count row; empty result when no mass.
std::vector<double> cumulative(const Eigen::Ref<const Eigen::VectorXd>& counts) {
  std::vector<double> cdf(static_cast<std::size_t>(counts.size()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < counts.size(); ++i) {
    acc += std::max(0.0, counts(i));
    cdf[static_cast<std::size_t>(i)] = acc;
  }
  if (!(acc > 0.0)) cdf.clear();
  return cdf;
}

std::size_t draw(const std::vector<double>& cdf, Rng& rng) {
  const double u = uniform01(rng) * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) --it;
  // Skip zero-width entries that upper_bound can land on when u hits an edge.
  std::size_t idx = static_cast<std::size_t>(it - cdf.begin());
  while (idx > 0 && cdf[idx] == cdf[idx - 1]) --idx;
  return idx;
}

}  // namespace

void validate(const SynthConfig& c) {
  if (!(c.eps_total > 0.0)) throw std::invalid_argument("synth config: eps_total must be positive");
  double sum = 0.0;
  for (double r : c.budget_split) {
    if (!(r >= 0.0)) throw std::invalid_argument("synth config: budget fractions must be >= 0");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("synth config: budget fractions must sum to 1");
  if (c.budget_split[0] <= 0.0 || c.budget_split[1] <= 0.0 || c.budget_split[2] <= 0.0) {
    throw std::invalid_argument("synth config: every stage needs a positive budget share");
  }
  if (c.g1 < 1 || c.g2 < 1) throw std::invalid_argument("synth config: grid sizes must be >= 1");
  if (!(c.theta > 0.0)) throw std::invalid_argument("synth config: theta must be positive");
}

nlohmann::json to_json(const SynthConfig& c) {
  nlohmann::json j = {{"budget_split", c.budget_split}, {"g1", c.g1},           {"g2", c.g2},
                      {"theta", c.theta},               {"max_walk_length", c.walk_cap()}};
  j["eps_total"] = std::isinf(c.eps_total) ? nlohmann::json(nullptr) : nlohmann::json(c.eps_total);
  return j;
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  SynthConfig c;
  if (!j.contains("eps_total") || j["eps_total"].is_null()) {
    c.eps_total = std::numeric_limits<double>::infinity();
  } else {
    c.eps_total = j["eps_total"].get<double>();
  }
  if (j.contains("budget_split")) c.budget_split = j["budget_split"].get<std::array<double, 3>>();
  c.g1 = j.value("g1", c.g1);
  c.g2 = j.value("g2", c.g2);
  c.theta = j.value("theta", c.theta);
  c.max_walk_length = j.value("max_walk_length", std::size_t{0});
  validate(c);
  return c;
}

std::array<double, 3> split_budget(const SynthConfig& c) {
  validate(c);
  const double t = c.eps_total;
  if (std::isinf(t)) return {t, t, t};
  const double grid = c.budget_split[0] * t;
  const double first = c.budget_split[1] * t;
  return {grid, first, t - (grid + first)};
}

AdaptiveGrid::AdaptiveGrid(BoundingBox bbox, int g1, int g2, std::vector<bool> subdivided)
    : bbox_(bbox), g1_(g1), g2_(g2), subdivided_(std::move(subdivided)) {
  validate(bbox_);
  if (g1_ < 1 || g2_ < 1) throw std::invalid_argument("AdaptiveGrid: grid sizes must be >= 1");
  const auto cells = static_cast<std::size_t>(g1_) * static_cast<std::size_t>(g1_);
  if (subdivided_.size() != cells) throw std::invalid_argument("AdaptiveGrid: one flag per level-1 cell required");
  first_leaf_.resize(cells);
  std::size_t next = 0;
  for (std::size_t c = 0; c < cells; ++c) {
    first_leaf_[c] = next;
    next += subdivided_[c] ? static_cast<std::size_t>(g2_) * static_cast<std::size_t>(g2_) : 1;
  }
  leaf_count_ = next;
}

std::size_t AdaptiveGrid::subdivided_count() const {
  return static_cast<std::size_t>(std::count(subdivided_.begin(), subdivided_.end(), true));
}

std::pair<int, int> AdaptiveGrid::level1_row_col(const GeoPoint& p) const {
  const double fr = (p.lat - bbox_.lat_min) / bbox_.lat_span() * g1_;
  const double fc = (p.lon - bbox_.lon_min) / bbox_.lon_span() * g1_;
  const int r = std::clamp(static_cast<int>(std::floor(fr)), 0, g1_ - 1);
  const int c = std::clamp(static_cast<int>(std::floor(fc)), 0, g1_ - 1);
  return {r, c};
}

std::size_t AdaptiveGrid::level1_cell_of(const GeoPoint& p) const {
  auto [r, c] = level1_row_col(p);
  return static_cast<std::size_t>(r) * static_cast<std::size_t>(g1_) + static_cast<std::size_t>(c);
}

std::size_t AdaptiveGrid::leaf_of(const GeoPoint& p) const {
  auto [r, c] = level1_row_col(p);
  const std::size_t cell = static_cast<std::size_t>(r) * static_cast<std::size_t>(g1_) + static_cast<std::size_t>(c);
  if (!subdivided_[cell]) return first_leaf_[cell];
  const double fr = (p.lat - bbox_.lat_min) / bbox_.lat_span() * g1_ - r;
  const double fc = (p.lon - bbox_.lon_min) / bbox_.lon_span() * g1_ - c;
  const int r2 = std::clamp(static_cast<int>(std::floor(fr * g2_)), 0, g2_ - 1);
  const int c2 = std::clamp(static_cast<int>(std::floor(fc * g2_)), 0, g2_ - 1);
  return first_leaf_[cell] + static_cast<std::size_t>(r2) * static_cast<std::size_t>(g2_) + static_cast<std::size_t>(c2);
}

BoundingBox AdaptiveGrid::leaf_region(std::size_t leaf) const {
  if (leaf >= leaf_count_) throw std::out_of_range("AdaptiveGrid: leaf index out of range");
  auto it = std::upper_bound(first_leaf_.begin(), first_leaf_.end(), leaf);
  const auto cell = static_cast<std::size_t>(it - first_leaf_.begin()) - 1;
  const int r = static_cast<int>(cell / static_cast<std::size_t>(g1_));
  const int c = static_cast<int>(cell % static_cast<std::size_t>(g1_));
  int sub_r = 0;
  int sub_c = 0;
  int div = 1;
  if (subdivided_[cell]) {
    const auto local = leaf - first_leaf_[cell];
    sub_r = static_cast<int>(local / static_cast<std::size_t>(g2_));
    sub_c = static_cast<int>(local % static_cast<std::size_t>(g2_));
    div = g2_;
  }
  const double total = static_cast<double>(g1_) * div;
  const double r0 = static_cast<double>(r * div + sub_r);
  const double c0 = static_cast<double>(c * div + sub_c);
  BoundingBox out;
  out.lat_min = bbox_.lat_min + bbox_.lat_span() * (r0 / total);
  out.lat_max = bbox_.lat_min + bbox_.lat_span() * ((r0 + 1.0) / total);
  out.lon_min = bbox_.lon_min + bbox_.lon_span() * (c0 / total);
  out.lon_max = bbox_.lon_min + bbox_.lon_span() * ((c0 + 1.0) / total);
  if (r * div + sub_r == g1_ * div - 1) out.lat_max = bbox_.lat_max;
  if (c * div + sub_c == g1_ * div - 1) out.lon_max = bbox_.lon_max;
  return out;
}

nlohmann::json AdaptiveGrid::to_json() const {
  std::vector<int> flags(subdivided_.begin(), subdivided_.end());
  return {{"bbox", {bbox_.lat_min, bbox_.lon_min, bbox_.lat_max, bbox_.lon_max}},
          {"g1", g1_},
          {"g2", g2_},
          {"subdivided", flags},
          {"noisy_level1_counts", noisy_counts_},
          {"budget", trajdp::to_json(budget_)}};
}

AdaptiveGrid AdaptiveGrid::from_json(const nlohmann::json& j) {
  const auto b = j.at("bbox").get<std::array<double, 4>>();
  const auto flags = j.at("subdivided").get<std::vector<int>>();
  AdaptiveGrid grid(BoundingBox{b[0], b[1], b[2], b[3]}, j.at("g1").get<int>(), j.at("g2").get<int>(),
                    std::vector<bool>(flags.begin(), flags.end()));
  if (j.contains("noisy_level1_counts")) {
    grid.set_noisy_level1_counts(j["noisy_level1_counts"].get<std::vector<double>>());
  }
  if (j.contains("budget")) grid.set_budget(budget_from_json(j["budget"]));
  return grid;
}

nlohmann::json MarkovModel::to_json() const {
  nlohmann::json first = nlohmann::json::array();
  for (Eigen::Index r = 0; r < first_order.rows(); ++r) {
    std::vector<double> row(first_order.cols());
    for (Eigen::Index c = 0; c < first_order.cols(); ++c) row[static_cast<std::size_t>(c)] = first_order(r, c);
    first.push_back(row);
  }
  nlohmann::json second = nlohmann::json::array();
  for (const auto& [ctx, counts] : second_order) {
    std::vector<double> values(counts.data(), counts.data() + counts.size());
    second.push_back({{"context", {ctx.first, ctx.second}}, {"counts", values}});
  }
  return {{"leaf_count", leaf_count},
          {"first_order", std::move(first)},
          {"second_order", std::move(second)},
          {"budget", trajdp::to_json(budget)}};
}

MarkovModel MarkovModel::from_json(const nlohmann::json& j) {
  MarkovModel m;
  m.leaf_count = j.at("leaf_count").get<std::size_t>();
  const auto states = static_cast<Eigen::Index>(m.state_count());
  m.first_order = Eigen::MatrixXd::Zero(states, states);
  const auto& first = j.at("first_order");
  if (static_cast<Eigen::Index>(first.size()) != states) throw std::invalid_argument("MarkovModel: bad first_order");
  for (Eigen::Index r = 0; r < states; ++r) {
    const auto row = first[static_cast<std::size_t>(r)].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != states) throw std::invalid_argument("MarkovModel: bad first_order");
    for (Eigen::Index c = 0; c < states; ++c) m.first_order(r, c) = row[static_cast<std::size_t>(c)];
  }
  for (const auto& entry : j.at("second_order")) {
    const auto ctx = entry.at("context").get<std::array<std::size_t, 2>>();
    const auto values = entry.at("counts").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(values.size()) != states) throw std::invalid_argument("MarkovModel: bad context");
    m.second_order[{ctx[0], ctx[1]}] = Eigen::Map<const Eigen::VectorXd>(values.data(), states);
  }
  m.budget = budget_from_json(j.at("budget"));
  return m;
}

AdaptiveGrid build_grid(const TrajectoryDataset& d, double eps_grid, const SynthConfig& config, Rng& rng) {
  validate(config);
  if (!(eps_grid > 0.0)) throw std::invalid_argument("build_grid: eps_grid must be positive");
  const BoundingBox box = d.bbox.value_or(BoundingBox{});
  validate(box);
  const std::size_t length = fixed_length_of(d);
  const auto cells = static_cast<std::size_t>(config.g1) * static_cast<std::size_t>(config.g1);

  AdaptiveGrid level1(box, config.g1, config.g2, std::vector<bool>(cells, false));
  std::vector<double> counts(cells, 0.0);
  for (const auto& t : d.trajectories) {
    for (const auto& p : t.points) counts[level1.level1_cell_of(p)] += 1.0;
  }
  const double sensitivity = 2.0 * static_cast<double>(length);
  double total = 0.0;
  for (auto& c : counts) {
    c += noise(sensitivity, eps_grid, rng);
    total += std::max(0.0, c);
  }
  const double threshold = config.theta * total / static_cast<double>(cells);
  std::vector<bool> subdivided(cells, false);
  if (config.g2 > 1) {
    for (std::size_t c = 0; c < cells; ++c) subdivided[c] = counts[c] > threshold;
  }
  AdaptiveGrid grid(box, config.g1, config.g2, std::move(subdivided));
  grid.set_noisy_level1_counts(std::move(counts));
  grid.set_budget(pure_budget(eps_grid));
  return grid;
}

std::vector<std::size_t> cell_sequence(const Trajectory& t, const AdaptiveGrid& grid) {
  std::vector<std::size_t> seq;
  seq.reserve(t.size());
  for (const auto& p : t.points) {
    const std::size_t leaf = grid.leaf_of(p);
    if (seq.empty() || seq.back() != leaf) seq.push_back(leaf);
  }
  return seq;
}

MarkovModel fit_markov_dp(const TrajectoryDataset& d, const AdaptiveGrid& grid, double eps_1st, double eps_2nd,
                          Rng& rng) {
  if (d.empty()) throw std::invalid_argument("fit_markov_dp: empty dataset");
  if (!(eps_1st > 0.0) || !(eps_2nd > 0.0)) throw std::invalid_argument("fit_markov_dp: epsilons must be positive");
  const std::size_t length = fixed_length_of(d);
  MarkovModel model;
  model.leaf_count = grid.leaf_count();
  const std::size_t S = model.leaf_count;
  const auto states = static_cast<Eigen::Index>(model.state_count());
  const std::size_t start = model.start_state();
  const std::size_t end = model.end_state();

  Eigen::MatrixXd first = Eigen::MatrixXd::Zero(states, states);
  std::map<std::pair<std::size_t, std::size_t>, Eigen::VectorXd> second_true;
  std::vector<std::vector<std::size_t>> sequences;
  sequences.reserve(d.size());
  for (const auto& t : d.trajectories) {
    std::vector<std::size_t> seq = cell_sequence(t, grid);
    std::vector<std::size_t> padded;
    padded.reserve(seq.size() + 2);
    padded.push_back(start);
    padded.insert(padded.end(), seq.begin(), seq.end());
    padded.push_back(end);
    for (std::size_t i = 0; i + 1 < padded.size(); ++i) {
      first(static_cast<Eigen::Index>(padded[i]), static_cast<Eigen::Index>(padded[i + 1])) += 1.0;
    }
    sequences.push_back(std::move(padded));
  }

  // Transitions into START, out of END, START -> END and leaf self-loops
  // cannot occur in any dataset, so they stay exactly zero.
  auto structural_zero = [&](std::size_t from, std::size_t to) {
    return to == start || from == end || (from == start && to == end) || (from == to && from < S);
  };

  const double sensitivity = 2.0 * (static_cast<double>(length) + 1.0);
  for (Eigen::Index r = 0; r < states; ++r) {
    for (Eigen::Index c = 0; c < states; ++c) {
      if (structural_zero(static_cast<std::size_t>(r), static_cast<std::size_t>(c))) continue;
      first(r, c) += noise(sensitivity, eps_1st, rng);
    }
  }

  const double context_threshold = std::isinf(eps_1st) ? 0.0 : 3.0 * sensitivity / eps_1st;
  for (Eigen::Index r = 0; r < states; ++r) {
    for (Eigen::Index c = 0; c < states; ++c) {
      if (structural_zero(static_cast<std::size_t>(r), static_cast<std::size_t>(c))) continue;
      if (static_cast<std::size_t>(c) == end) continue;
      if (first(r, c) > context_threshold) {
        model.second_order.emplace(std::make_pair(static_cast<std::size_t>(r), static_cast<std::size_t>(c)),
                                   Eigen::VectorXd::Zero(states));
      }
    }
  }
  for (const auto& seq : sequences) {
    for (std::size_t i = 0; i + 2 < seq.size(); ++i) {
      auto it = model.second_order.find({seq[i], seq[i + 1]});
      if (it != model.second_order.end()) it->second(static_cast<Eigen::Index>(seq[i + 2])) += 1.0;
    }
  }
  for (auto& [ctx, counts] : model.second_order) {
    for (Eigen::Index next = 0; next < states; ++next) {
      if (structural_zero(ctx.second, static_cast<std::size_t>(next))) continue;
      counts(next) += noise(sensitivity, eps_2nd, rng);
    }
  }

  model.first_order = std::move(first);
  const std::array<PrivacyBudget, 3> parts{grid.budget(), pure_budget(eps_1st), pure_budget(eps_2nd)};
  model.budget = compose_sequential(parts);
  return model;
}

std::vector<CellPath> generate_walks(const MarkovModel& model, std::size_t count, std::size_t max_walk_length,
                                     Rng& rng) {
  if (max_walk_length < 1) throw std::invalid_argument("generate_walks: max_walk_length must be >= 1");
  const std::size_t start = model.start_state();
  const std::size_t end = model.end_state();
  const std::size_t S = model.leaf_count;
  if (model.first_order.rows() != static_cast<Eigen::Index>(model.state_count()) ||
      model.first_order.cols() != static_cast<Eigen::Index>(model.state_count())) {
    throw std::invalid_argument("generate_walks: first-order table has the wrong shape");
  }

  std::vector<std::vector<double>> first_cdf(model.state_count());
  for (std::size_t s = 0; s < model.state_count(); ++s) {
    first_cdf[s] = cumulative(model.first_order.row(static_cast<Eigen::Index>(s)).transpose());
  }
  if (first_cdf[start].empty()) throw std::invalid_argument("generate_walks: no outgoing mass from START");
  {
    const auto& cdf = first_cdf[start];
    double leaf_mass = S > 0 ? cdf[S - 1] : 0.0;
    if (!(leaf_mass > 0.0)) throw std::invalid_argument("generate_walks: START never reaches a cell");
  }
  std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> second_cdf;
  for (const auto& [ctx, counts] : model.second_order) {
    auto cdf = cumulative(counts);
    if (!cdf.empty()) second_cdf.emplace(ctx, std::move(cdf));
  }

  std::vector<CellPath> walks;
  walks.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    CellPath path;
    std::size_t prev = start;
    std::size_t cur = draw(first_cdf[start], rng);
    // START -> END carries no mass after structural zeroing, but a loaded
    // model may contain it; redraw in that case.
    while (cur == end || cur == start) cur = draw(first_cdf[start], rng);
    path.push_back(cur);
    while (path.size() < max_walk_length) {
      std::size_t next = end;
      auto it = second_cdf.find({prev, cur});
      if (it != second_cdf.end()) {
        next = draw(it->second, rng);
      } else if (!first_cdf[cur].empty()) {
        next = draw(first_cdf[cur], rng);
      }
      if (next == end || next == start) break;
      prev = cur;
      cur = next;
      path.push_back(cur);
    }
    walks.push_back(std::move(path));
  }
  return walks;
}

TrajectoryDataset to_trajectories(const std::vector<CellPath>& paths, const AdaptiveGrid& grid,
                                  std::size_t target_length, Rng& rng) {
  if (paths.empty()) throw std::invalid_argument("to_trajectories: no paths");
  if (target_length < 1) throw std::invalid_argument("to_trajectories: target length must be >= 1");
  TrajectoryDataset out;
  out.bbox = grid.bbox();
  out.fixed_length = target_length;
  out.trajectories.reserve(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (paths[i].empty()) throw std::invalid_argument("to_trajectories: empty path");
    Trajectory raw{"syn-" + std::to_string(i), {}};
    raw.points.reserve(paths[i].size());
    for (auto leaf : paths[i]) {
      const BoundingBox r = grid.leaf_region(leaf);
      raw.points.push_back({uniform_real(rng, r.lat_min, r.lat_max), uniform_real(rng, r.lon_min, r.lon_max)});
    }
    if (raw.size() == 1 || target_length == 1) {
      raw.points.assign(target_length, raw.points.front());
      out.trajectories.push_back(std::move(raw));
    } else {
      out.trajectories.push_back(resample_to_length(raw, target_length));
    }
  }
  return out;
}

SynthResult synthesize_markov(const TrajectoryDataset& train, const SynthConfig& config, std::size_t count,
                              std::size_t target_length, Rng& rng) {
  const auto eps = split_budget(config);
  AdaptiveGrid grid = build_grid(train, eps[0], config, rng);
  MarkovModel model = fit_markov_dp(train, grid, eps[1], eps[2], rng);
  auto walks = generate_walks(model, count, config.walk_cap(), rng);
  TrajectoryDataset data = to_trajectories(walks, grid, target_length, rng);
  return {std::move(data), std::move(grid), std::move(model)};
}

}  // namespace trajdp
