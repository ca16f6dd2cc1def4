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
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "trajdp/cond_embed.hpp"
#include "trajdp/dp_core.hpp"
#include "trajdp/geodata.hpp"
#include "trajdp/markov_synth.hpp"
#include "trajdp/metrics.hpp"

namespace trajdp {

/// Which sides of the pipeline carry a formal guarantee:
/// A none, B training data, C generation-time conditionals, D both.
enum class ThreatModel { A, B, C, D };

std::string to_string(ThreatModel t);
ThreatModel threat_model_from_string(const std::string& s);
bool requires_train_budget(ThreatModel t);
bool requires_generation_budget(ThreatModel t);

/// markov: the grid/Markov synthesizer, unconditional at generation time.
/// external-file: synthetic trajectories produced elsewhere.
/// cond-decoder: privatized conditional embeddings of real trajectories
/// decoded straight back to coordinates (a linear stand-in for a learned
/// conditional generator).
enum class Generator { markov, external_file, cond_decoder };

std::string to_string(Generator g);
Generator generator_from_string(const std::string& s);

struct CaseConfig {
  std::string case_id;
  ThreatModel threat_model = ThreatModel::D;
  Generator generator = Generator::markov;
  SynthConfig synth;
  std::optional<CondEmbedConfig> cond_mechanism;
  std::optional<double> eps_s;  // recorded only
  std::string external_path;
  std::uint64_t seed = 0;
  std::size_t repetitions = 5;
  std::size_t k_folds = 5;
  std::size_t folds = 5;  // how many of the k folds to run
  std::size_t n_eval = 3000;
  EvalConfig eval;
};

/// Throws std::invalid_argument when the declared threat model does not match
/// the budgets the configuration would produce.
void validate(const CaseConfig& c);
nlohmann::json to_json(const CaseConfig& c);
CaseConfig case_config_from_json(const nlohmann::json& j);

/// A file holds either one case object or {"cases": [...]}.
std::vector<CaseConfig> load_cases(const std::string& path);

struct SpentBudget {
  std::optional<PrivacyBudget> train;
  std::optional<PrivacyBudget> generation;
};

nlohmann::json to_json(const SpentBudget& b);
SpentBudget spent_budget_from_json(const nlohmann::json& j);

/// Budgets a case spends per run, independent of the data drawn.
SpentBudget planned_budget(const CaseConfig& c, std::size_t conditional_pool_size);

struct RunResult {
  std::string case_id;
  ThreatModel threat_model = ThreatModel::A;
  std::size_t fold = 0;
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  MetricReport metrics;
  SpentBudget budget;
  std::optional<double> eps_s;
  double wall_clock_s = 0.0;
};

nlohmann::json to_json(const RunResult& r);
RunResult run_result_from_json(const nlohmann::json& j);

/// Every (fold, repetition) of one case. `data` must be preprocessed, with a
/// fixed length and a bounding box.
std::vector<RunResult> run_case(const CaseConfig& config, const TrajectoryDataset& data);

/// Linear compression map fitted to a set of trajectories (principal
/// directions, scaled so that the largest embedding has norm one in the
/// mechanism's norm), and its decoder.
struct LinearCodec {
  CompressionMap compression;
  Eigen::MatrixXd decode_weights;  // d_out x 2L
  Eigen::VectorXd decode_bias;     // 2L
};

LinearCodec fit_linear_codec(const TrajectoryDataset& d, const BoundingBox& box, Eigen::Index d_out, NormType p);

/// One run of the cond-decoder generator: sampled real conditionals and the
/// decoded synthetic trajectories, paired by index.
/// Without a mechanism the embeddings are decoded unchanged and `m` real
/// trajectories are drawn; with one, its m and d_out apply.
struct CondDecoderRun {
  TrajectoryDataset real;
  TrajectoryDataset synthetic;
  std::optional<PrivacyBudget> budget;
};

CondDecoderRun run_cond_decoder(const TrajectoryDataset& train, const TrajectoryDataset& pool,
                                const std::optional<CondEmbedConfig>& config, std::size_t m,
                                const BoundingBox& box, Rng& rng);

struct CaseSummary {
  std::string case_id;
  std::size_t runs = 0;
  std::array<double, MetricReport::kFieldCount> mean{};
  /// Half-width of the 95% t-interval; empty for a single run.
  std::optional<std::array<double, MetricReport::kFieldCount>> ci95;
};

/// Groups by case id in first-appearance order.
std::vector<CaseSummary> summarize(const std::vector<RunResult>& results);
std::string summary_csv(const std::vector<CaseSummary>& summaries);
std::string runs_csv(const std::vector<RunResult>& results);

/// Writes the summary table to `path`. Throws on empty input.
void write_report(const std::vector<RunResult>& results, const std::string& path);

/// g x g point counts, row-major with row = latitude bin ascending.
Eigen::MatrixXd density_grid(const TrajectoryDataset& d, const BoundingBox& box, int g);
std::string density_csv(const Eigen::MatrixXd& grid);
void emit_density_grid(const TrajectoryDataset& d, int g, const std::string& path,
                       std::optional<BoundingBox> box = std::nullopt);

}  // namespace trajdp
