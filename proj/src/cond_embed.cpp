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

#include "trajdp/cond_embed.hpp"

namespace trajdp {

namespace {

// Rows coming out of clip_norm can exceed C by rounding only.
constexpr double kNormSlack = 1e-12;

}  // namespace

void validate(const CondEmbedConfig& config) {
  if (!(config.eps_c > 0.0)) throw std::invalid_argument("cond embedding: eps_c must be positive");
  if (config.delta_c && !(*config.delta_c > 0.0 && *config.delta_c < 1.0)) {
    throw std::invalid_argument("cond embedding: delta_c must lie in (0, 1)");
  }
  if (config.d_out < 1) throw std::invalid_argument("cond embedding: d_out must be >= 1");
  if (config.m < 1) throw std::invalid_argument("cond embedding: m must be >= 1");
  if (config.embedding_dim < 1) throw std::invalid_argument("cond embedding: embedding_dim must be >= 1");
  NoiseSpec spec{config.mechanism, 1.0, norm_for(config.mechanism), config.clip_bound};
  validate(spec);
  if (config.mechanism == Mechanism::vmf && config.d_out < 2) {
    throw std::invalid_argument("cond embedding: vmf needs d_out >= 2");
  }
}

nlohmann::json to_json(const CondEmbedConfig& c) {
  nlohmann::json j = {{"mechanism", to_string(c.mechanism)},
                      {"eps_c", c.eps_c},
                      {"C", c.clip_bound},
                      {"d_out", c.d_out},
                      {"m", c.m},
                      {"worst_case_m_equals_n", c.worst_case_m_equals_n},
                      {"embedding_dim", c.embedding_dim}};
  j["delta_c"] = c.delta_c ? nlohmann::json(*c.delta_c) : nlohmann::json(nullptr);
  return j;
}

CondEmbedConfig cond_config_from_json(const nlohmann::json& j) {
  CondEmbedConfig c;
  c.mechanism = mechanism_from_string(j.value("mechanism", std::string("laplace")));
  c.eps_c = j.at("eps_c").get<double>();
  if (j.contains("delta_c") && !j["delta_c"].is_null()) c.delta_c = j["delta_c"].get<double>();
  c.clip_bound = j.value("C", 1.0);
  c.d_out = j.value("d_out", Eigen::Index{8});
  c.m = j.value("m", std::size_t{3000});
  c.worst_case_m_equals_n = j.value("worst_case_m_equals_n", true);
  c.embedding_dim = j.value("embedding_dim", Eigen::Index{512});
  validate(c);
  return c;
}

Eigen::VectorXd flatten(const Trajectory& t) {
  Eigen::VectorXd x(2 * static_cast<Eigen::Index>(t.size()));
  for (std::size_t i = 0; i < t.size(); ++i) {
    x(2 * static_cast<Eigen::Index>(i)) = t.points[i].lat;
    x(2 * static_cast<Eigen::Index>(i) + 1) = t.points[i].lon;
  }
  return x;
}

Eigen::VectorXd flatten(const NormalizedPoints& points) {
  // Row-major view gives (row0.lat, row0.lon, row1.lat, ...).
  Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor> rm = points;
  return Eigen::Map<const Eigen::VectorXd>(rm.data(), rm.size());
}

std::vector<std::size_t> sample_conditional_indices(std::size_t n, std::size_t m, Rng& rng) {
  if (m > n) throw std::invalid_argument("sample_conditionals: m exceeds the dataset size");
  return sample_without_replacement(n, m, rng);
}

std::vector<Trajectory> sample_conditionals(const TrajectoryDataset& d, std::size_t m, Rng& rng) {
  std::vector<Trajectory> out;
  out.reserve(m);
  for (auto i : sample_conditional_indices(d.size(), m, rng)) out.push_back(d.trajectories[i]);
  return out;
}

Bounding bounding_for(Mechanism m) { return m == Mechanism::vmf ? Bounding::scale : Bounding::clip; }

Eigen::VectorXd compress(const Eigen::Ref<const Eigen::VectorXd>& x, const CompressionMap& map, double clip_bound,
                         NormType p, Bounding bounding) {
  if (x.size() != map.in_dim()) {
    throw std::invalid_argument("compress: flattened input has length " + std::to_string(x.size()) +
                                ", map expects " + std::to_string(map.in_dim()));
  }
  Eigen::VectorXd f = map.apply(x);
  if (bounding == Bounding::scale) return scale_to_norm(f, clip_bound);
  return clip_norm(f, clip_bound, p);
}

Eigen::VectorXd compress(const Trajectory& t, const CompressionMap& map, double clip_bound, NormType p,
                         Bounding bounding) {
  return compress(flatten(t), map, clip_bound, p, bounding);
}

Eigen::MatrixXd compress_rows(const Eigen::Ref<const Eigen::MatrixXd>& rows, const CompressionMap& map,
                              double clip_bound, NormType p, Bounding bounding) {
  Eigen::MatrixXd out(rows.rows(), map.out_dim());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    out.row(i) = compress(rows.row(i).transpose(), map, clip_bound, p, bounding).transpose();
  }
  return out;
}

NoiseSpec noise_spec_for(const CondEmbedConfig& config, std::size_t n) {
  validate(config);
  NoiseSpec spec{config.mechanism, 0.0, norm_for(config.mechanism), config.clip_bound};
  switch (config.mechanism) {
    case Mechanism::laplace:
      spec.scale = laplace_scale(config.clip_bound, config.eps_c);
      break;
    case Mechanism::gaussian:
      spec.scale = analytic_gaussian_sigma(config.eps_c, config.delta_c.value_or(default_delta(n)),
                                           2.0 * config.clip_bound);
      break;
    case Mechanism::vmf:
      spec.scale = config.eps_c / (2.0 * config.clip_bound);
      break;
  }
  return spec;
}

PrivacyBudget reported_budget(const CondEmbedConfig& config, std::size_t n) {
  validate(config);
  if (config.m > n) throw std::invalid_argument("cond embedding: m exceeds the dataset size");
  const double delta = config.mechanism == Mechanism::gaussian ? config.delta_c.value_or(default_delta(n)) : 0.0;
  const std::size_t m_eff = config.worst_case_m_equals_n ? n : config.m;
  return amplify_by_subsampling(config.eps_c, delta, m_eff, n);
}

CondEmbedding privatize(const Eigen::Ref<const Eigen::MatrixXd>& embeddings, const CondEmbedConfig& config,
                        std::size_t n, Rng& rng) {
  if (embeddings.rows() < 1) throw std::invalid_argument("privatize: no embeddings");
  if (static_cast<std::size_t>(embeddings.rows()) > n) throw std::invalid_argument("privatize: requires n >= m");
  if (embeddings.cols() != config.d_out) throw std::invalid_argument("privatize: embedding width differs from d_out");
  if (static_cast<std::size_t>(embeddings.rows()) != config.m) {
    throw std::invalid_argument("privatize: row count differs from the configured m");
  }
  const NoiseSpec spec = noise_spec_for(config, n);
  for (Eigen::Index i = 0; i < embeddings.rows(); ++i) {
    const double norm = lp_norm(embeddings.row(i), spec.norm_type);
    if (spec.mechanism == Mechanism::vmf) {
      if (std::abs(norm - 1.0) > 1e-9) throw std::invalid_argument("privatize: vmf rows must have unit norm");
    } else if (norm > spec.clip_bound * (1.0 + kNormSlack)) {
      throw std::invalid_argument("privatize: row " + std::to_string(i) + " exceeds the clip bound");
    }
  }

  CondEmbedding out;
  out.budget = reported_budget(config, n);
  switch (spec.mechanism) {
    case Mechanism::laplace:
      out.matrix = embeddings + laplace_sample(embeddings.rows(), embeddings.cols(), spec.scale, rng);
      break;
    case Mechanism::gaussian:
      out.matrix = embeddings + gaussian_sample(embeddings.rows(), embeddings.cols(), spec.scale, rng);
      break;
    case Mechanism::vmf:
      out.matrix.resize(embeddings.rows(), embeddings.cols());
      for (Eigen::Index i = 0; i < embeddings.rows(); ++i) {
        Eigen::VectorXd mu = embeddings.row(i).transpose();
        mu /= mu.norm();
        out.matrix.row(i) = vmf_sample(mu, spec.scale, rng).transpose();
      }
      break;
  }
  return out;
}

Eigen::VectorXd noise_schedule_mix(const Eigen::Ref<const Eigen::VectorXd>& clean,
                                   const Eigen::Ref<const Eigen::VectorXd>& noisy, double beta, PipelineMode mode) {
  if (mode != PipelineMode::training) {
    throw std::logic_error("noise_schedule_mix: the beta schedule must not be applied during generation");
  }
  if (clean.size() != noisy.size()) throw std::invalid_argument("noise_schedule_mix: dimension mismatch");
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("noise_schedule_mix: beta must lie in [0, 1]");
  return beta * noisy + (1.0 - beta) * clean;
}

Eigen::VectorXd noise_schedule_mix(const Eigen::Ref<const Eigen::VectorXd>& clean,
                                   const Eigen::Ref<const Eigen::VectorXd>& noisy, Rng& rng, PipelineMode mode) {
  if (mode != PipelineMode::training) {
    throw std::logic_error("noise_schedule_mix: the beta schedule must not be applied during generation");
  }
  return noise_schedule_mix(clean, noisy, uniform01(rng), mode);
}

Eigen::MatrixXd noise_schedule_mix_rows(const Eigen::Ref<const Eigen::MatrixXd>& clean,
                                        const Eigen::Ref<const Eigen::MatrixXd>& noisy, Rng& rng,
                                        PipelineMode mode) {
  if (mode != PipelineMode::training) {
    throw std::logic_error("noise_schedule_mix: the beta schedule must not be applied during generation");
  }
  if (clean.rows() != noisy.rows() || clean.cols() != noisy.cols()) {
    throw std::invalid_argument("noise_schedule_mix: shape mismatch");
  }
  Eigen::MatrixXd out(clean.rows(), clean.cols());
  for (Eigen::Index i = 0; i < clean.rows(); ++i) {
    const double beta = uniform01(rng);
    out.row(i) = beta * noisy.row(i) + (1.0 - beta) * clean.row(i);
  }
  return out;
}

DecompressedEmbedding decompress(const CondEmbedding& e, const DecompressionMap& map) {
  if (e.matrix.cols() != map.in_dim()) throw std::invalid_argument("decompress: embedding width differs from map");
  return {map.apply_rows(e.matrix), e.budget};
}

CondPipelineResult run_cond_pipeline(const TrajectoryDataset& d, const BoundingBox& box,
                                     const CompressionMap& compression, const DecompressionMap& decompression,
                                     const CondEmbedConfig& config, Rng& rng) {
  validate(config);
  if (compression.out_dim() != config.d_out) throw std::invalid_argument("cond pipeline: map d_out differs");
  CondPipelineResult r;
  r.indices = sample_conditional_indices(d.size(), config.m, rng);
  r.bounded.resize(static_cast<Eigen::Index>(config.m), config.d_out);
  const NormType p = norm_for(config.mechanism);
  const Bounding bounding = bounding_for(config.mechanism);
  for (std::size_t i = 0; i < r.indices.size(); ++i) {
    const Trajectory& t = d.trajectories[r.indices[i]];
    const Eigen::VectorXd x = flatten(normalize_points(t.points, box));
    r.bounded.row(static_cast<Eigen::Index>(i)) = compress(x, compression, config.clip_bound, p, bounding).transpose();
  }
  r.embedding = privatize(r.bounded, config, d.size(), rng);
  r.decompressed = decompress(r.embedding, decompression);
  return r;
}

}  // namespace trajdp
