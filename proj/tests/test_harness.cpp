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


#include <cmath>
#include <filesystem>
#include <limits>
#include <set>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <unistd.h>

#include <gtest/gtest.h>

#include "oracle_values.hpp"
#include "test_support.hpp"
#include "trajdp/harness.hpp"

namespace trajdp {
namespace {

using testing::kTestBox;
using testing::random_dataset;

namespace fs = std::filesystem;

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("trajdp_harness_" + std::to_string(::getpid()) + "_" + name);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CaseConfig small_markov_case(double eps) {
  CaseConfig c;
  c.case_id = "m";
  c.synth.eps_total = eps;
  c.threat_model = std::isinf(eps) ? ThreatModel::C : ThreatModel::D;
  c.repetitions = 1;
  c.folds = 1;
  c.n_eval = 25;
  c.eval.range.n_queries = 20;
  c.seed = 11;
  return c;
}

TrajectoryDataset small_world(std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return random_dataset(150, 8, rng);
}

TEST(ThreatModel, BudgetRequirements) {
  EXPECT_FALSE(requires_train_budget(ThreatModel::A));
  EXPECT_FALSE(requires_generation_budget(ThreatModel::A));
  EXPECT_TRUE(requires_train_budget(ThreatModel::B));
  EXPECT_FALSE(requires_generation_budget(ThreatModel::B));
  EXPECT_FALSE(requires_train_budget(ThreatModel::C));
  EXPECT_TRUE(requires_generation_budget(ThreatModel::C));
  EXPECT_TRUE(requires_train_budget(ThreatModel::D));
  EXPECT_TRUE(requires_generation_budget(ThreatModel::D));
  EXPECT_EQ(threat_model_from_string("C"), ThreatModel::C);
  EXPECT_THROW(threat_model_from_string("E"), std::invalid_argument);
}

TEST(CaseConfig, ThreatModelMustMatchBudgets) {
  auto c = small_markov_case(1.0);
  c.threat_model = ThreatModel::A;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = small_markov_case(std::numeric_limits<double>::infinity());
  c.threat_model = ThreatModel::D;
  EXPECT_THROW(validate(c), std::invalid_argument);

  CaseConfig ext;
  ext.case_id = "e";
  ext.generator = Generator::external_file;
  ext.threat_model = ThreatModel::A;
  EXPECT_THROW(validate(ext), std::invalid_argument);  // no path
  ext.external_path = "syn.jsonl";
  EXPECT_NO_THROW(validate(ext));
  ext.eps_s = 4.0;
  EXPECT_THROW(validate(ext), std::invalid_argument);
  ext.threat_model = ThreatModel::B;
  EXPECT_NO_THROW(validate(ext));

  CaseConfig cd;
  cd.case_id = "c";
  cd.generator = Generator::cond_decoder;
  cd.threat_model = ThreatModel::C;
  EXPECT_THROW(validate(cd), std::invalid_argument);
  cd.cond_mechanism = CondEmbedConfig{};
  EXPECT_NO_THROW(validate(cd));
}

TEST(CaseConfig, MarkovRejectsConditionalMechanism) {
  auto c = small_markov_case(1.0);
  c.cond_mechanism = CondEmbedConfig{};
  EXPECT_THROW(validate(c), std::invalid_argument);
}

TEST(CaseConfig, JsonRoundTripAndUnknownKeys) {
  auto c = small_markov_case(2.0);
  c.eval.grid_g = 32;
  const auto back = case_config_from_json(nlohmann::json::parse(to_json(c).dump()));
  EXPECT_EQ(back.case_id, c.case_id);
  EXPECT_EQ(back.threat_model, c.threat_model);
  EXPECT_EQ(back.synth.eps_total, 2.0);
  EXPECT_EQ(back.n_eval, c.n_eval);
  EXPECT_EQ(back.eval.grid_g, 32);
  auto j = to_json(c);
  j["epsilon"] = 3;
  EXPECT_THROW(case_config_from_json(j), std::invalid_argument);
}

TEST(LoadCases, ListAndDuplicates) {
  const auto path = temp_path("cases.json");
  nlohmann::json j = {{"cases", {to_json(small_markov_case(1.0)), to_json(small_markov_case(2.0))}}};
  j["cases"][1]["case_id"] = "m2";
  std::ofstream(path) << j.dump();
  EXPECT_EQ(load_cases(path.string()).size(), 2u);
  j["cases"][1]["case_id"] = "m";
  std::ofstream(path) << j.dump();
  EXPECT_THROW(load_cases(path.string()), std::invalid_argument);
  fs::remove(path);
  EXPECT_THROW(load_cases(path.string()), std::runtime_error);
}

TEST(RunCase, SingleFoldSingleRepetition) {
  const auto results = run_case(small_markov_case(1.0), small_world(1));
  ASSERT_EQ(results.size(), 1u);
  EXPECT_EQ(results[0].case_id, "m");
  EXPECT_EQ(results[0].fold, 0u);
}

TEST(RunCase, FoldsTimesRepetitions) {
  auto c = small_markov_case(1.0);
  c.folds = 2;
  c.repetitions = 3;
  const auto results = run_case(c, small_world(2));
  ASSERT_EQ(results.size(), 6u);
  std::set<std::uint64_t> seeds;
  for (const auto& r : results) seeds.insert(r.seed);
  EXPECT_EQ(seeds.size(), 6u);
}

TEST(RunCase, Deterministic) {
  const auto d = small_world(3);
  const auto a = run_case(small_markov_case(1.0), d);
  const auto b = run_case(small_markov_case(1.0), d);
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(a[0].seed, b[0].seed);
  EXPECT_EQ(a[0].metrics.values(), b[0].metrics.values());
}

TEST(RunCase, MarkovThreatModelDListsBothBudgets) {
  const auto r = run_case(small_markov_case(1.0), small_world(4)).front();
  ASSERT_TRUE(r.budget.train.has_value());
  ASSERT_TRUE(r.budget.generation.has_value());
  EXPECT_DOUBLE_EQ(r.budget.train->epsilon, 1.0);
  EXPECT_EQ(r.budget.generation->epsilon, 0.0);
  const auto j = to_json(r);
  EXPECT_FALSE(j.at("budget").at("train").is_null());
  EXPECT_FALSE(j.at("budget").at("generation").is_null());
}

TEST(RunCase, NonPrivateMarkovHasNoTrainBudget) {
  const auto r = run_case(small_markov_case(std::numeric_limits<double>::infinity()), small_world(5)).front();
  EXPECT_FALSE(r.budget.train.has_value());
  EXPECT_TRUE(r.budget.generation.has_value());
}

TEST(RunCase, RequiresPreprocessedData) {
  auto d = small_world(6);
  d.bbox.reset();
  EXPECT_THROW(run_case(small_markov_case(1.0), d), std::invalid_argument);
}

TEST(RunCase, ExternalFile) {
  const auto d = small_world(7);
  Rng rng = make_rng(70);
  const auto syn = random_dataset(60, 8, rng);
  const auto path = temp_path("external.jsonl");
  save_dataset(syn, path.string());
  CaseConfig c;
  c.case_id = "ext";
  c.generator = Generator::external_file;
  c.external_path = path.string();
  c.eps_s = 8.0;
  c.threat_model = ThreatModel::B;
  c.repetitions = 1;
  c.folds = 1;
  c.n_eval = 20;
  c.eval.range.n_queries = 10;
  const auto r = run_case(c, d).front();
  ASSERT_TRUE(r.budget.train.has_value());
  EXPECT_EQ(r.budget.train->epsilon, 8.0);
  EXPECT_EQ(r.budget.train->adjacency, Adjacency::add_or_remove);
  EXPECT_FALSE(r.budget.generation.has_value());
  EXPECT_EQ(r.eps_s, 8.0);
  fs::remove(path);
  EXPECT_ANY_THROW(run_case(c, d));
}

TEST(RunCase, CondDecoderWithMechanism) {
  const auto d = small_world(8);
  CaseConfig c;
  c.case_id = "cd";
  c.generator = Generator::cond_decoder;
  c.threat_model = ThreatModel::C;
  CondEmbedConfig m;
  m.d_out = 4;
  m.m = 20;
  c.cond_mechanism = m;
  c.repetitions = 2;
  c.folds = 1;
  c.n_eval = 20;
  c.eval.range.n_queries = 10;
  const auto results = run_case(c, d);
  ASSERT_EQ(results.size(), 2u);
  for (const auto& r : results) {
    EXPECT_FALSE(r.budget.train.has_value());
    ASSERT_TRUE(r.budget.generation.has_value());
    EXPECT_DOUBLE_EQ(r.budget.generation->epsilon, 10.0);
    for (double v : r.metrics.values()) EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(CondDecoder, WithoutMechanismReconstructsWithFullRank) {
  // With d_out = 2L the principal-component codec is lossless up to
  // rounding, so decoded trajectories sit on the originals.
  Rng rng = make_rng(9);
  const auto d = random_dataset(80, 4, rng);
  Rng r2 = make_rng(10);
  CondEmbedConfig none;
  none.d_out = 8;
  const auto codec = fit_linear_codec(d, kTestBox, 8, NormType::l2);
  Eigen::VectorXd x = flatten(normalize_points(d.trajectories[0].points, kTestBox));
  const Eigen::VectorXd e = codec.compression.apply(x);
  EXPECT_LE(e.norm(), 1.0 + 1e-12);
  const Eigen::VectorXd back = codec.decode_weights.transpose() * e + codec.decode_bias;
  EXPECT_LE((back - x).cwiseAbs().maxCoeff(), 1e-9);
  const auto run = run_cond_decoder(d, d, std::nullopt, 10, kTestBox, r2);
  EXPECT_EQ(run.real.size(), 10u);
  EXPECT_EQ(run.synthetic.size(), 10u);
  EXPECT_FALSE(run.budget.has_value());
}

TEST(SpentBudget, JsonRoundTrip) {
  SpentBudget b;
  b.train = PrivacyBudget{1.5, 0.0, Adjacency::replace_one, PrivacyUnit::trajectory};
  const auto back = spent_budget_from_json(nlohmann::json::parse(to_json(b).dump()));
  EXPECT_EQ(back.train, b.train);
  EXPECT_FALSE(back.generation.has_value());
}

TEST(RunResult, JsonRoundTrip) {
  const auto r = run_case(small_markov_case(1.0), small_world(11)).front();
  const auto back = run_result_from_json(nlohmann::json::parse(to_json(r).dump()));
  EXPECT_EQ(back.case_id, r.case_id);
  EXPECT_EQ(back.seed, r.seed);
  EXPECT_EQ(back.metrics.values(), r.metrics.values());
  EXPECT_EQ(back.budget.train, r.budget.train);
  EXPECT_EQ(back.threat_model, r.threat_model);
}

RunResult result_with(const std::string& id, double jsd_value) {
  RunResult r;
  r.case_id = id;
  r.metrics.jsd = jsd_value;
  r.metrics.dtw = 2 * jsd_value;
  return r;
}

TEST(Summarize, SingleRunHasNoInterval) {
  const auto s = summarize({result_with("a", 0.3)});
  ASSERT_EQ(s.size(), 1u);
  EXPECT_FALSE(s[0].ci95.has_value());
  const std::string csv = summary_csv(s);
  EXPECT_NE(csv.find("a,1,0.3,,"), std::string::npos);
}

TEST(Summarize, IdenticalRunsZeroInterval) {
  const auto s = summarize(std::vector<RunResult>(5, result_with("a", 0.3)));
  ASSERT_TRUE(s[0].ci95.has_value());
  EXPECT_EQ((*s[0].ci95)[0], 0.0);
  EXPECT_DOUBLE_EQ(s[0].mean[0], 0.3);
}

TEST(Summarize, KnownColumnMatchesHandInterval) {
  std::vector<RunResult> runs;
  for (double v : {0.1, 0.2, 0.4, 0.3, 0.5}) runs.push_back(result_with("a", v));
  const auto s = summarize(runs);
  // mean 0.3, sample sd sqrt(0.025), half-width t(0.975, 4) * sd / sqrt(5)
  const double half = oracle::kT975_df4 * std::sqrt(0.025) / std::sqrt(5.0);
  EXPECT_NEAR(s[0].mean[0], 0.3, 1e-15);
  EXPECT_NEAR((*s[0].ci95)[0], half, 1e-14);
  EXPECT_NEAR((*s[0].ci95)[7], 2 * half, 1e-14);
}

TEST(Summarize, GroupsByCaseInOrder) {
  const auto s = summarize({result_with("b", 1), result_with("a", 2), result_with("b", 3)});
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].case_id, "b");
  EXPECT_EQ(s[0].runs, 2u);
  EXPECT_DOUBLE_EQ(s[0].mean[0], 2.0);
  EXPECT_EQ(s[1].case_id, "a");
}

TEST(WriteReport, HeaderAndEmptyInput) {
  const auto path = temp_path("summary.csv");
  write_report({result_with("a", 0.5)}, path.string());
  const std::string text = read_file(path);
  EXPECT_EQ(text.substr(0, text.find('\n')).substr(0, 34), "case_id,runs,JSD_mean,JSD_ci95,SWD");
  fs::remove(path);
  EXPECT_THROW(write_report({}, path.string()), std::invalid_argument);
}

TEST(RunsCsv, BudgetColumns) {
  RunResult r = result_with("a", 0.1);
  r.threat_model = ThreatModel::B;
  r.budget.train = PrivacyBudget{2.0, 0.0, Adjacency::add_or_remove, PrivacyUnit::trajectory};
  r.eps_s = 2.0;
  const std::string csv = runs_csv({r});
  const std::string row = csv.substr(csv.find('\n') + 1);
  EXPECT_EQ(row.substr(0, 11), "a,B,0,0,0,0");
  EXPECT_NE(row.find(",2,0,,,2,"), std::string::npos);
}

TEST(Density, SinglePoint) {
  TrajectoryDataset d;
  d.trajectories.push_back({"a", {{41.2, -8.6}}});
  const Eigen::MatrixXd g = density_grid(d, kTestBox, 10);
  EXPECT_EQ(g.sum(), 1.0);
  EXPECT_EQ((g.array() > 0).count(), 1);
}

TEST(Density, SumIsPointCount) {
  const auto d = small_world(12);
  EXPECT_EQ(density_grid(d, kTestBox, 16).sum(), 150.0 * 8.0);
}

TEST(Density, EmptyDatasetZeroGrid) {
  const auto path = temp_path("density.csv");
  emit_density_grid(TrajectoryDataset{}, 3, path.string());
  EXPECT_EQ(read_file(path), "0,0,0\n0,0,0\n0,0,0\n");
  fs::remove(path);
}

TEST(Density, RowsAscendInLatitude) {
  TrajectoryDataset d;
  d.trajectories.push_back({"a", {{kTestBox.lat_min, kTestBox.lon_max}}});
  const auto path = temp_path("density2.csv");
  emit_density_grid(d, 2, path.string(), kTestBox);
  EXPECT_EQ(read_file(path), "0,1\n0,0\n");
  fs::remove(path);
}

}  // namespace
}  // namespace trajdp
