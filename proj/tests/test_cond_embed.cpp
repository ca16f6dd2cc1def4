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


#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "trajdp/cond_embed.hpp"

namespace trajdp {
namespace {

using testing::kTestBox;
using testing::random_dataset;

Eigen::MatrixXd clipped_rows(Eigen::Index m, Eigen::Index d, double c, Rng& rng) {
  Eigen::MatrixXd x(m, d);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) x(i, k) = uniform_real(rng, -1, 1);
    x.row(i) = clip_norm(Eigen::VectorXd(x.row(i).transpose()), c, NormType::l1).transpose();
  }
  return x;
}

TEST(Flatten, InterleavesLatLon) {
  Trajectory t{"a", {{1, 2}, {3, 4}}};
  EXPECT_EQ(flatten(t), Eigen::Vector4d(1, 2, 3, 4));
  NormalizedPoints p(2, 2);
  p << 1, 2, 3, 4;
  EXPECT_EQ(flatten(p), Eigen::Vector4d(1, 2, 3, 4));
}

TEST(SampleConditionals, FullDrawIsPermutation) {
  Rng rng = make_rng(1);
  auto idx = sample_conditional_indices(50, 50, rng);
  std::sort(idx.begin(), idx.end());
  std::vector<std::size_t> all(50);
  std::iota(all.begin(), all.end(), 0);
  EXPECT_EQ(idx, all);
}

TEST(SampleConditionals, SingleDrawUniform) {
  Rng rng = make_rng(2);
  std::vector<int> hits(4, 0);
  constexpr int kTrials = 100000;
  for (int i = 0; i < kTrials; ++i) ++hits[sample_conditional_indices(4, 1, rng).front()];
  for (int h : hits) EXPECT_NEAR(h / double(kTrials), 0.25, 0.01);
}

TEST(SampleConditionals, DistinctTrajectories) {
  Rng rng = make_rng(3);
  const auto d = random_dataset(40, 4, rng);
  const auto picked = sample_conditionals(d, 25, rng);
  ASSERT_EQ(picked.size(), 25u);
  std::set<std::string> ids;
  for (const auto& t : picked) ids.insert(t.id);
  EXPECT_EQ(ids.size(), 25u);
}

TEST(SampleConditionals, MoreThanAvailableThrows) {
  Rng rng = make_rng(4);
  EXPECT_THROW(sample_conditional_indices(3, 4, rng), std::invalid_argument);
}

TEST(Compress, ZeroMapGivesZero) {
  const auto map = CompressionMap::zero(6, 3);
  EXPECT_EQ(compress(Eigen::VectorXd::Ones(6), map, 1.0, NormType::l1), Eigen::VectorXd::Zero(3));
}

TEST(Compress, IdentityMapClips) {
  const CompressionMap map(Eigen::MatrixXd::Identity(4, 4), Eigen::VectorXd::Zero(4));
  const Eigen::VectorXd out = compress(Eigen::Vector4d(1, 1, 1, 1), map, 2.0, NormType::l1);
  EXPECT_NEAR(out.lpNorm<1>(), 2.0, 1e-14);
  EXPECT_NEAR(out(0), 0.5, 1e-15);
}

TEST(Compress, NormBoundedForRandomInputs) {
  Rng rng = make_rng(5);
  const auto map = CompressionMap::random(10, 6, rng);
  for (int i = 0; i < 1000; ++i) {
    Eigen::VectorXd x(10);
    for (int k = 0; k < 10; ++k) x(k) = uniform_real(rng, -50, 50);
    EXPECT_LE(compress(x, map, 1.0, NormType::l1).lpNorm<1>(), 1.0 + 1e-12);
    EXPECT_LE(compress(x, map, 1.0, NormType::l2).norm(), 1.0 + 1e-12);
    EXPECT_NEAR(compress(x, map, 1.0, NormType::l2, Bounding::scale).norm(), 1.0, 1e-12);
  }
}

TEST(Compress, LengthMismatchThrows) {
  const auto map = CompressionMap::zero(6, 3);
  EXPECT_THROW(compress(Eigen::VectorXd::Ones(4), map, 1.0, NormType::l1), std::invalid_argument);
}

TEST(Compress, VmfUsesScaling) {
  EXPECT_EQ(bounding_for(Mechanism::vmf), Bounding::scale);
  EXPECT_EQ(bounding_for(Mechanism::laplace), Bounding::clip);
  EXPECT_EQ(bounding_for(Mechanism::gaussian), Bounding::clip);
}

TEST(Privatize, VanishingNoiseReturnsInput) {
  Rng rng = make_rng(6);
  CondEmbedConfig cfg;
  cfg.d_out = 5;
  cfg.m = 20;
  cfg.eps_c = 2e12;  // lambda = 1e-12
  const Eigen::MatrixXd x = clipped_rows(20, 5, 1.0, rng);
  const auto e = privatize(x, cfg, 100, rng);
  EXPECT_LE((e.matrix - x).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Privatize, OutputShape) {
  Rng rng = make_rng(7);
  for (auto mech : {Mechanism::laplace, Mechanism::gaussian}) {
    CondEmbedConfig cfg;
    cfg.mechanism = mech;
    cfg.d_out = 7;
    cfg.m = 30;
    const Eigen::MatrixXd x = clipped_rows(30, 7, 1.0, rng);
    const auto e = privatize(x, cfg, 300, rng);
    EXPECT_EQ(e.matrix.rows(), 30);
    EXPECT_EQ(e.matrix.cols(), 7);
  }
}

TEST(Privatize, VmfRowsOnSphere) {
  Rng rng = make_rng(8);
  CondEmbedConfig cfg;
  cfg.mechanism = Mechanism::vmf;
  cfg.d_out = 8;
  cfg.m = 10;
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(10, 8);
  x.rowwise().normalize();
  const auto e = privatize(x, cfg, 10, rng);
  for (Eigen::Index i = 0; i < 10; ++i) EXPECT_NEAR(e.matrix.row(i).norm(), 1.0, 1e-12);
}

TEST(Privatize, VmfRequiresUnitBound) {
  CondEmbedConfig cfg;
  cfg.mechanism = Mechanism::vmf;
  cfg.clip_bound = 2.0;
  EXPECT_THROW(validate(cfg), std::invalid_argument);
}

TEST(Privatize, VmfRejectsNonUnitRows) {
  Rng rng = make_rng(9);
  CondEmbedConfig cfg;
  cfg.mechanism = Mechanism::vmf;
  cfg.d_out = 4;
  cfg.m = 2;
  const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(2, 4, 0.1);
  EXPECT_THROW(privatize(x, cfg, 10, rng), std::invalid_argument);
}

TEST(Privatize, RejectsUnclippedRows) {
  Rng rng = make_rng(10);
  CondEmbedConfig cfg;
  cfg.d_out = 3;
  cfg.m = 2;
  const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(2, 3);
  EXPECT_THROW(privatize(x, cfg, 10, rng), std::invalid_argument);
}

TEST(Privatize, RejectsShapeAndSizeErrors) {
  Rng rng = make_rng(11);
  CondEmbedConfig cfg;
  cfg.d_out = 3;
  cfg.m = 4;
  const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(4, 3);
  EXPECT_THROW(privatize(x, cfg, 3, rng), std::invalid_argument);
  EXPECT_THROW(privatize(Eigen::MatrixXd::Zero(4, 2), cfg, 10, rng), std::invalid_argument);
  EXPECT_THROW(privatize(Eigen::MatrixXd::Zero(3, 3), cfg, 10, rng), std::invalid_argument);
}

TEST(Privatize, WorstCaseReportDominates) {
  CondEmbedConfig cfg;
  cfg.m = 300;
  cfg.eps_c = 10.0;
  const PrivacyBudget worst = reported_budget(cfg, 3000);
  EXPECT_DOUBLE_EQ(worst.epsilon, 10.0);
  cfg.worst_case_m_equals_n = false;
  const PrivacyBudget actual = reported_budget(cfg, 3000);
  EXPECT_LT(actual.epsilon, worst.epsilon);
  EXPECT_NEAR(actual.epsilon, std::log1p(0.1 * std::expm1(10.0)), 1e-12);
}

TEST(Privatize, LaplaceNoiseScale) {
  Rng rng = make_rng(12);
  CondEmbedConfig cfg;
  cfg.d_out = 50;
  cfg.m = 200;
  cfg.eps_c = 4.0;  // lambda = 0.5, mean |noise| = 0.5
  const auto e = privatize(Eigen::MatrixXd::Zero(200, 50), cfg, 200, rng);
  EXPECT_NEAR(e.matrix.cwiseAbs().mean(), 0.5, 0.02);
  EXPECT_DOUBLE_EQ(noise_spec_for(cfg, 200).scale, 0.5);
}

TEST(Privatize, GaussianDefaultDelta) {
  CondEmbedConfig cfg;
  cfg.mechanism = Mechanism::gaussian;
  cfg.m = 1000;
  const PrivacyBudget b = reported_budget(cfg, 1000);
  EXPECT_NEAR(b.delta, std::pow(1000.0, -1.1), 1e-18);
  EXPECT_DOUBLE_EQ(noise_spec_for(cfg, 1000).scale, analytic_gaussian_sigma(10.0, default_delta(1000), 2.0));
}

TEST(NoiseScheduleMix, Endpoints) {
  const Eigen::Vector3d clean(1, 2, 3), noisy(-1, 0, 5);
  EXPECT_EQ(noise_schedule_mix(clean, noisy, 1.0, PipelineMode::training), noisy);
  EXPECT_EQ(noise_schedule_mix(clean, noisy, 0.0, PipelineMode::training), clean);
}

TEST(NoiseScheduleMix, EqualInputsUnchanged) {
  Rng rng = make_rng(13);
  const Eigen::Vector3d v(0.25, -2, 7);
  for (int i = 0; i < 20; ++i) EXPECT_TRUE(noise_schedule_mix(v, v, rng, PipelineMode::training).isApprox(v, 1e-15));
}

TEST(NoiseScheduleMix, MeanBetaIsHalf) {
  Rng rng = make_rng(14);
  const Eigen::VectorXd clean = Eigen::VectorXd::Zero(1), noisy = Eigen::VectorXd::Ones(1);
  double sum = 0.0;
  constexpr int kTrials = 100000;
  for (int i = 0; i < kTrials; ++i) sum += noise_schedule_mix(clean, noisy, rng, PipelineMode::training)(0);
  EXPECT_NEAR(sum / kTrials, 0.5, 0.01);
}

TEST(NoiseScheduleMix, RefusedDuringGeneration) {
  Rng rng = make_rng(15);
  const Eigen::Vector2d v(1, 2);
  EXPECT_THROW(noise_schedule_mix(v, v, 0.5, PipelineMode::generation), std::logic_error);
  EXPECT_THROW(noise_schedule_mix(v, v, rng, PipelineMode::generation), std::logic_error);
  EXPECT_THROW(noise_schedule_mix_rows(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 2), rng,
                                       PipelineMode::generation),
               std::logic_error);
}

TEST(NoiseScheduleMix, RowsUseFreshBeta) {
  Rng rng = make_rng(16);
  const auto mixed = noise_schedule_mix_rows(Eigen::MatrixXd::Zero(5, 3), Eigen::MatrixXd::Ones(5, 3), rng,
                                             PipelineMode::training);
  for (Eigen::Index i = 0; i < 5; ++i) {
    EXPECT_DOUBLE_EQ(mixed(i, 0), mixed(i, 2));
    if (i > 0) {
      EXPECT_NE(mixed(i, 0), mixed(0, 0));
    }
  }
}

TEST(Decompress, ZeroMapGivesZerosAndKeepsBudget) {
  CondEmbedding e{Eigen::MatrixXd::Random(4, 3), PrivacyBudget{2.5, 1e-6}};
  const auto out = decompress(e, DecompressionMap::zero(3, 9));
  EXPECT_EQ(out.matrix, Eigen::MatrixXd::Zero(4, 9));
  EXPECT_EQ(out.budget, e.budget);
}

TEST(Decompress, WidthMismatchThrows) {
  CondEmbedding e{Eigen::MatrixXd::Zero(4, 3), PrivacyBudget{}};
  EXPECT_THROW(decompress(e, DecompressionMap::zero(2, 9)), std::invalid_argument);
}

TEST(Pipeline, RowsDependOnOwnTrajectoryOnly) {
  Rng rng = make_rng(17);
  auto d = random_dataset(30, 6, rng);
  const auto comp = CompressionMap::random(12, 4, rng);
  const auto decomp = DecompressionMap::random(4, 16, rng);
  CondEmbedConfig cfg;
  cfg.d_out = 4;
  cfg.m = 30;
  Rng r1 = make_rng(99);
  const auto a = run_cond_pipeline(d, kTestBox, comp, decomp, cfg, r1);
  // Move the trajectory that landed in row 3.
  const std::size_t moved = a.indices[3];
  for (auto& p : d.trajectories[moved].points) p.lat = kTestBox.lat_min + 0.5 * (p.lat - kTestBox.lat_min);
  Rng r2 = make_rng(99);
  const auto b = run_cond_pipeline(d, kTestBox, comp, decomp, cfg, r2);
  ASSERT_EQ(a.indices, b.indices);
  int changed = 0;
  for (Eigen::Index i = 0; i < a.bounded.rows(); ++i) {
    if (a.bounded.row(i) != b.bounded.row(i)) {
      ++changed;
      EXPECT_EQ(i, 3);
    }
  }
  EXPECT_EQ(changed, 1);
  EXPECT_EQ(a.decompressed.matrix.rows(), 30);
  EXPECT_EQ(a.decompressed.matrix.cols(), 16);
  EXPECT_EQ(a.decompressed.budget, a.embedding.budget);
}

TEST(Pipeline, MismatchedMapThrows) {
  Rng rng = make_rng(18);
  const auto d = random_dataset(10, 4, rng);
  CondEmbedConfig cfg;
  cfg.d_out = 4;
  cfg.m = 5;
  EXPECT_THROW(run_cond_pipeline(d, kTestBox, CompressionMap::zero(8, 3), DecompressionMap::zero(3, 8), cfg, rng),
               std::invalid_argument);
}

TEST(AffineMap, JsonRoundTrip) {
  Rng rng = make_rng(19);
  const auto map = CompressionMap::random(5, 3, rng);
  const auto back = CompressionMap::from_json(nlohmann::json::parse(map.to_json().dump()));
  EXPECT_EQ(back.weights(), map.weights());
  EXPECT_EQ(back.bias(), map.bias());
}

TEST(AffineMap, RaggedJsonRejected) {
  nlohmann::json j = {{"d_in", 2}, {"d_out", 2}, {"weights", {{1, 2}, {3}}}, {"bias", {0, 0}}};
  EXPECT_THROW(CompressionMap::from_json(j), std::invalid_argument);
}

TEST(CondEmbedConfig, JsonRoundTrip) {
  CondEmbedConfig c;
  c.mechanism = Mechanism::gaussian;
  c.eps_c = 5;
  c.delta_c = 1e-6;
  c.d_out = 64;
  c.m = 100;
  const auto back = cond_config_from_json(to_json(c));
  EXPECT_EQ(back.mechanism, c.mechanism);
  EXPECT_EQ(back.eps_c, c.eps_c);
  EXPECT_EQ(back.delta_c, c.delta_c);
  EXPECT_EQ(back.d_out, c.d_out);
  EXPECT_EQ(back.m, c.m);
}

TEST(CondEmbedConfig, InvalidValuesThrow) {
  CondEmbedConfig c;
  c.eps_c = 0;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = {};
  c.delta_c = 1.5;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = {};
  c.d_out = 0;
  EXPECT_THROW(validate(c), std::invalid_argument);
}

}  // namespace
}  // namespace trajdp
