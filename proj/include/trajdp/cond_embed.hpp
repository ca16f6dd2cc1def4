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

// Differentially private conditional embeddings: subsample, compress,
// bound the norm, add noise, decompress.

#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "trajdp/dp_core.hpp"
#include "trajdp/geodata.hpp"
#include "trajdp/random.hpp"

namespace trajdp {

/// x -> W^T x + b with W of shape in_dim x out_dim. `Role` only separates
/// compression maps from decompression maps at the type level.
template <typename Scalar, typename Role>
class AffineMap {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  AffineMap() = default;
  AffineMap(Matrix weights, Vector bias) : weights_(std::move(weights)), bias_(std::move(bias)) {
    if (weights_.cols() != bias_.size()) throw std::invalid_argument("AffineMap: bias size must equal out_dim");
    if (!weights_.allFinite() || !bias_.allFinite()) throw std::invalid_argument("AffineMap: non-finite entry");
  }

  static AffineMap zero(Eigen::Index in_dim, Eigen::Index out_dim) {
    return AffineMap(Matrix::Zero(in_dim, out_dim), Vector::Zero(out_dim));
  }

  /// Weights uniform on (-a, a) with a = 1/sqrt(in_dim); zero bias.
  static AffineMap random(Eigen::Index in_dim, Eigen::Index out_dim, Rng& rng) {
    const Scalar a = Scalar(1) / std::sqrt(static_cast<Scalar>(in_dim));
    Matrix w(in_dim, out_dim);
    for (Eigen::Index i = 0; i < in_dim; ++i) {
      for (Eigen::Index j = 0; j < out_dim; ++j) w(i, j) = static_cast<Scalar>(uniform_real(rng, -a, a));
    }
    return AffineMap(std::move(w), Vector::Zero(out_dim));
  }

  Eigen::Index in_dim() const { return weights_.rows(); }
  Eigen::Index out_dim() const { return weights_.cols(); }
  const Matrix& weights() const { return weights_; }
  const Vector& bias() const { return bias_; }

  template <typename Derived>
  Vector apply(const Eigen::MatrixBase<Derived>& x) const {
    if (x.size() != in_dim()) throw std::invalid_argument("AffineMap: input has the wrong dimension");
    return weights_.transpose() * x + bias_;
  }

  /// Row-wise map of an (m x in_dim) matrix.
  template <typename Derived>
  Matrix apply_rows(const Eigen::MatrixBase<Derived>& rows) const {
    if (rows.cols() != in_dim()) throw std::invalid_argument("AffineMap: input has the wrong dimension");
    return (rows * weights_).rowwise() + bias_.transpose();
  }

  nlohmann::json to_json() const {
    nlohmann::json w = nlohmann::json::array();
    for (Eigen::Index i = 0; i < weights_.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index j = 0; j < weights_.cols(); ++j) row.push_back(weights_(i, j));
      w.push_back(std::move(row));
    }
    nlohmann::json b = nlohmann::json::array();
    for (Eigen::Index j = 0; j < bias_.size(); ++j) b.push_back(bias_(j));
    return {{"d_in", in_dim()}, {"d_out", out_dim()}, {"weights", std::move(w)}, {"bias", std::move(b)}};
  }

  static AffineMap from_json(const nlohmann::json& j) {
    const auto in_dim = j.at("d_in").get<Eigen::Index>();
    const auto out_dim = j.at("d_out").get<Eigen::Index>();
    const auto& w = j.at("weights");
    const auto& b = j.at("bias");
    if (static_cast<Eigen::Index>(w.size()) != in_dim || static_cast<Eigen::Index>(b.size()) != out_dim) {
      throw std::invalid_argument("AffineMap: declared dimensions do not match the arrays");
    }
    Matrix weights(in_dim, out_dim);
    for (Eigen::Index i = 0; i < in_dim; ++i) {
      if (static_cast<Eigen::Index>(w[i].size()) != out_dim) {
        throw std::invalid_argument("AffineMap: ragged weight row " + std::to_string(i));
      }
      for (Eigen::Index k = 0; k < out_dim; ++k) weights(i, k) = w[i][k].get<Scalar>();
    }
    Vector bias(out_dim);
    for (Eigen::Index k = 0; k < out_dim; ++k) bias(k) = b[k].get<Scalar>();
    return AffineMap(std::move(weights), std::move(bias));
  }

 private:
  Matrix weights_;
  Vector bias_;
};

struct CompressionRole {};
struct DecompressionRole {};

using CompressionMap = AffineMap<double, CompressionRole>;
using DecompressionMap = AffineMap<double, DecompressionRole>;

struct CondEmbedConfig {
  Mechanism mechanism = Mechanism::laplace;
  double eps_c = 10.0;
  /// Defaults to 1 / n^1.1 of the dataset the conditionals come from.
  std::optional<double> delta_c;
  double clip_bound = 1.0;
  Eigen::Index d_out = 8;
  std::size_t m = 3000;
  /// Report the guarantee as if m == n. The reported epsilon then equals
  /// eps_c; the actual guarantee for m < n is stronger.
  bool worst_case_m_equals_n = true;
  Eigen::Index embedding_dim = 512;
};

void validate(const CondEmbedConfig& config);
nlohmann::json to_json(const CondEmbedConfig& config);
CondEmbedConfig cond_config_from_json(const nlohmann::json& j);

struct CondEmbedding {
  Eigen::MatrixXd matrix;  // m x d_out
  PrivacyBudget budget;
};

/// Decompressed embeddings, m x e. Same budget as the input (post-processing).
struct DecompressedEmbedding {
  Eigen::MatrixXd matrix;
  PrivacyBudget budget;
};

/// Interleaved (lat0, lon0, lat1, lon1, ...), so d_in = 2L.
Eigen::VectorXd flatten(const Trajectory& t);
Eigen::VectorXd flatten(const NormalizedPoints& points);

/// Indices of a uniform m-subset drawn without replacement.
std::vector<std::size_t> sample_conditional_indices(std::size_t n, std::size_t m, Rng& rng);
std::vector<Trajectory> sample_conditionals(const TrajectoryDataset& d, std::size_t m, Rng& rng);

/// clip: min(1, C/||f(x)||_p) f(x). scale: (C/||f(x)||_2) f(x), used by VMF.
enum class Bounding { clip, scale };
Bounding bounding_for(Mechanism m);

Eigen::VectorXd compress(const Eigen::Ref<const Eigen::VectorXd>& x, const CompressionMap& map, double clip_bound,
                         NormType p, Bounding bounding = Bounding::clip);
Eigen::VectorXd compress(const Trajectory& t, const CompressionMap& map, double clip_bound, NormType p,
                         Bounding bounding = Bounding::clip);
/// Row-wise compression of an (m x d_in) matrix.
Eigen::MatrixXd compress_rows(const Eigen::Ref<const Eigen::MatrixXd>& rows, const CompressionMap& map,
                              double clip_bound, NormType p, Bounding bounding = Bounding::clip);

/// Mechanism parameters for conditionals drawn from a dataset of size n:
/// lambda = 2C/eps, sigma from the analytic curve at sensitivity 2C, or
/// kappa = eps/2.
NoiseSpec noise_spec_for(const CondEmbedConfig& config, std::size_t n);

/// The budget privatize() attaches: amplification of (eps_c, delta_c) with
/// m_eff = n under the worst-case flag and m otherwise.
PrivacyBudget reported_budget(const CondEmbedConfig& config, std::size_t n);

/// Applies the configured mechanism to already-bounded rows.
CondEmbedding privatize(const Eigen::Ref<const Eigen::MatrixXd>& embeddings, const CondEmbedConfig& config,
                        std::size_t n, Rng& rng);

/// The beta schedule may only run while training; generation must see the
/// full mechanism output.
enum class PipelineMode { training, generation };

Eigen::VectorXd noise_schedule_mix(const Eigen::Ref<const Eigen::VectorXd>& clean,
                                   const Eigen::Ref<const Eigen::VectorXd>& noisy, double beta, PipelineMode mode);
/// Draws beta ~ U(0, 1).
Eigen::VectorXd noise_schedule_mix(const Eigen::Ref<const Eigen::VectorXd>& clean,
                                   const Eigen::Ref<const Eigen::VectorXd>& noisy, Rng& rng, PipelineMode mode);
/// One fresh beta per row.
Eigen::MatrixXd noise_schedule_mix_rows(const Eigen::Ref<const Eigen::MatrixXd>& clean,
                                        const Eigen::Ref<const Eigen::MatrixXd>& noisy, Rng& rng,
                                        PipelineMode mode);

DecompressedEmbedding decompress(const CondEmbedding& e, const DecompressionMap& map);

/// Every intermediate of one end-to-end generation-time pass.
struct CondPipelineResult {
  std::vector<std::size_t> indices;  // positions of the sampled conditionals
  Eigen::MatrixXd bounded;           // m x d_out, before noise
  CondEmbedding embedding;           // after the mechanism
  DecompressedEmbedding decompressed;
};

/// Generation-mode pipeline over a dataset of n trajectories. Inputs are
/// normalized onto [-1, 1] with `box` before flattening.
CondPipelineResult run_cond_pipeline(const TrajectoryDataset& d, const BoundingBox& box,
                                     const CompressionMap& compression, const DecompressionMap& decompression,
                                     const CondEmbedConfig& config, Rng& rng);

}  // namespace trajdp
