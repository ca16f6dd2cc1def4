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


#include "trajdp/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <boost/math/distributions/students_t.hpp>

namespace trajdp {

namespace {

constexpr std::uint64_t kSplitStream = 0x5b1d;
constexpr std::uint64_t kEvalStream = 0xe7a1;

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, end);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw std::invalid_argument(std::string(what) + ": expected a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : j.items()) {
    if (!ok.contains(item.key())) throw std::invalid_argument(std::string(what) + ": unknown key '" + item.key() + "'");
  }
}

nlohmann::json optional_budget(const std::optional<PrivacyBudget>& b) {
  return b ? to_json(*b) : nlohmann::json(nullptr);
}

std::vector<std::size_t> sorted_sample(std::size_t n, std::size_t m, Rng& rng) {
  auto idx = sample_without_replacement(n, m, rng);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

std::string to_string(ThreatModel t) {
  switch (t) {
    case ThreatModel::A: return "A";
    case ThreatModel::B: return "B";
    case ThreatModel::C: return "C";
    case ThreatModel::D: return "D";
  }
  throw std::logic_error("unknown threat model");
}

ThreatModel threat_model_from_string(const std::string& s) {
  if (s == "A") return ThreatModel::A;
  if (s == "B") return ThreatModel::B;
  if (s == "C") return ThreatModel::C;
  if (s == "D") return ThreatModel::D;
  throw std::invalid_argument("unknown threat model '" + s + "' (expected A, B, C or D)");
}

bool requires_train_budget(ThreatModel t) { return t == ThreatModel::B || t == ThreatModel::D; }
bool requires_generation_budget(ThreatModel t) { return t == ThreatModel::C || t == ThreatModel::D; }

std::string to_string(Generator g) {
  switch (g) {
    case Generator::markov: return "markov";
    case Generator::external_file: return "external-file";
    case Generator::cond_decoder: return "cond-decoder";
  }
  throw std::logic_error("unknown generator");
}

Generator generator_from_string(const std::string& s) {
  if (s == "markov") return Generator::markov;
  if (s == "external-file") return Generator::external_file;
  if (s == "cond-decoder") return Generator::cond_decoder;
  throw std::invalid_argument("unknown generator '" + s + "'");
}

SpentBudget planned_budget(const CaseConfig& c, std::size_t conditional_pool_size) {
  SpentBudget b;
  switch (c.generator) {
    case Generator::markov:
      if (std::isfinite(c.synth.eps_total)) {
        b.train = PrivacyBudget{c.synth.eps_total, 0.0, Adjacency::replace_one, PrivacyUnit::trajectory};
      }
      // Generation reads no real data.
      b.generation = PrivacyBudget{0.0, 0.0, Adjacency::replace_one, PrivacyUnit::trajectory};
      break;
    case Generator::external_file:
      if (c.eps_s) b.train = PrivacyBudget{*c.eps_s, 0.0, Adjacency::add_or_remove, PrivacyUnit::trajectory};
      break;
    case Generator::cond_decoder:
      if (c.cond_mechanism) b.generation = reported_budget(*c.cond_mechanism, conditional_pool_size);
      break;
  }
  return b;
}

void validate(const CaseConfig& c) {
  if (c.case_id.empty()) throw std::invalid_argument("case: case_id must be nonempty");
  if (c.repetitions == 0) throw std::invalid_argument("case '" + c.case_id + "': repetitions must be >= 1");
  if (c.k_folds < 2) throw std::invalid_argument("case '" + c.case_id + "': k_folds must be >= 2");
  if (c.folds == 0 || c.folds > c.k_folds) {
    throw std::invalid_argument("case '" + c.case_id + "': folds must lie in [1, k_folds]");
  }
  if (c.n_eval == 0) throw std::invalid_argument("case '" + c.case_id + "': n_eval must be >= 1");
  validate(c.synth);
  validate(c.eval);
  if (c.cond_mechanism) validate(*c.cond_mechanism);
  if (c.eps_s && !(*c.eps_s > 0.0 && std::isfinite(*c.eps_s))) {
    throw std::invalid_argument("case '" + c.case_id + "': eps_s must be positive and finite");
  }
  if (c.generator == Generator::markov && c.cond_mechanism) {
    throw std::invalid_argument("case '" + c.case_id + "': the markov generator takes no conditional inputs");
  }
  if (c.generator == Generator::external_file && c.external_path.empty()) {
    throw std::invalid_argument("case '" + c.case_id + "': external-file generator needs external_path");
  }
  if (c.generator != Generator::external_file && c.eps_s) {
    throw std::invalid_argument("case '" + c.case_id + "': eps_s applies only to external-file cases");
  }
  const SpentBudget b = planned_budget(c, std::max<std::size_t>(c.n_eval, 2));
  if (b.train.has_value() != requires_train_budget(c.threat_model) ||
      b.generation.has_value() != requires_generation_budget(c.threat_model)) {
    throw std::invalid_argument("case '" + c.case_id + "': threat model " + to_string(c.threat_model) +
                                " does not match the budgets this configuration spends (train " +
                                (b.train ? "bounded" : "none") + ", generation " +
                                (b.generation ? "bounded" : "none") + ")");
  }
}

nlohmann::json to_json(const CaseConfig& c) {
  nlohmann::json j{{"case_id", c.case_id},
                   {"threat_model", to_string(c.threat_model)},
                   {"generator", to_string(c.generator)},
                   {"synth", to_json(c.synth)},
                   {"seed", c.seed},
                   {"repetitions", c.repetitions},
                   {"k_folds", c.k_folds},
                   {"folds", c.folds},
                   {"n_eval", c.n_eval},
                   {"eval", to_json(c.eval)}};
  j["cond_mechanism"] = c.cond_mechanism ? to_json(*c.cond_mechanism) : nlohmann::json(nullptr);
  j["eps_s"] = c.eps_s ? nlohmann::json(*c.eps_s) : nlohmann::json(nullptr);
  if (!c.external_path.empty()) j["external_path"] = c.external_path;
  return j;
}

CaseConfig case_config_from_json(const nlohmann::json& j) {
  check_keys(j,
             {"case_id", "threat_model", "generator", "synth", "cond_mechanism", "eps_s", "external_path", "seed",
              "repetitions", "k_folds", "folds", "n_eval", "eval", "description"},
             "case");
  CaseConfig c;
  c.case_id = j.at("case_id").get<std::string>();
  c.threat_model = threat_model_from_string(j.at("threat_model").get<std::string>());
  c.generator = generator_from_string(j.value("generator", std::string("markov")));
  if (j.contains("synth")) c.synth = synth_config_from_json(j.at("synth"));
  if (j.contains("cond_mechanism") && !j.at("cond_mechanism").is_null()) {
    c.cond_mechanism = cond_config_from_json(j.at("cond_mechanism"));
  }
  if (j.contains("eps_s") && !j.at("eps_s").is_null()) c.eps_s = j.at("eps_s").get<double>();
  c.external_path = j.value("external_path", std::string());
  c.seed = j.value("seed", c.seed);
  c.repetitions = j.value("repetitions", c.repetitions);
  c.k_folds = j.value("k_folds", c.k_folds);
  c.folds = j.value("folds", c.folds);
  c.n_eval = j.value("n_eval", c.n_eval);
  if (j.contains("eval")) c.eval = eval_config_from_json(j.at("eval"));
  validate(c);
  return c;
}

std::vector<CaseConfig> load_cases(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config '" + path + "': " + e.what());
  }
  std::vector<CaseConfig> out;
  if (j.is_object() && j.contains("cases")) {
    for (const auto& c : j.at("cases")) out.push_back(case_config_from_json(c));
  } else {
    out.push_back(case_config_from_json(j));
  }
  std::set<std::string> seen;
  for (const auto& c : out) {
    if (!seen.insert(c.case_id).second) throw std::invalid_argument("config: duplicate case_id '" + c.case_id + "'");
  }
  return out;
}

nlohmann::json to_json(const SpentBudget& b) {
  return {{"train", optional_budget(b.train)}, {"generation", optional_budget(b.generation)}};
}

SpentBudget spent_budget_from_json(const nlohmann::json& j) {
  SpentBudget b;
  if (j.contains("train") && !j.at("train").is_null()) b.train = budget_from_json(j.at("train"));
  if (j.contains("generation") && !j.at("generation").is_null()) b.generation = budget_from_json(j.at("generation"));
  return b;
}

nlohmann::json to_json(const RunResult& r) {
  return {{"case_id", r.case_id},
          {"threat_model", to_string(r.threat_model)},
          {"fold", r.fold},
          {"repetition", r.repetition},
          {"seed", r.seed},
          {"metrics", to_json(r.metrics)},
          {"budget", to_json(r.budget)},
          {"eps_s_recorded", r.eps_s ? nlohmann::json(*r.eps_s) : nlohmann::json(nullptr)},
          {"wall_clock_s", r.wall_clock_s}};
}

RunResult run_result_from_json(const nlohmann::json& j) {
  RunResult r;
  r.case_id = j.at("case_id").get<std::string>();
  r.threat_model = threat_model_from_string(j.at("threat_model").get<std::string>());
  r.fold = j.at("fold").get<std::size_t>();
  r.repetition = j.at("repetition").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.metrics = metric_report_from_json(j.at("metrics"));
  r.budget = spent_budget_from_json(j.at("budget"));
  if (j.contains("eps_s_recorded") && !j.at("eps_s_recorded").is_null()) {
    r.eps_s = j.at("eps_s_recorded").get<double>();
  }
  r.wall_clock_s = j.value("wall_clock_s", 0.0);
  return r;
}

LinearCodec fit_linear_codec(const TrajectoryDataset& d, const BoundingBox& box, Eigen::Index d_out, NormType p) {
  if (d.empty()) throw std::invalid_argument("fit_linear_codec: empty dataset");
  const auto coords = normalize_coords(d, box);
  const Eigen::Index dim = 2 * coords.front().rows();
  if (d_out < 1 || d_out > dim) throw std::invalid_argument("fit_linear_codec: d_out outside [1, 2L]");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(coords.size()), dim);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (2 * coords[i].rows() != dim) throw std::invalid_argument("fit_linear_codec: trajectories differ in length");
    x.row(static_cast<Eigen::Index>(i)) = flatten(coords[i]).transpose();
  }
  const Eigen::RowVectorXd mu = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mu;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(x.rows());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw std::runtime_error("fit_linear_codec: eigendecomposition failed");
  // Eigenvalues ascend; keep the last d_out directions, largest first.
  const Eigen::MatrixXd w = eig.eigenvectors().rightCols(d_out).rowwise().reverse();
  const Eigen::MatrixXd z = centered * w;
  double s = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) s = std::max(s, lp_norm(z.row(i), p));
  if (!(s > 0.0)) s = 1.0;
  LinearCodec codec;
  codec.compression = CompressionMap(w / s, -(mu * w).transpose() / s);
  codec.decode_weights = s * w.transpose();
  codec.decode_bias = mu.transpose();
  return codec;
}

CondDecoderRun run_cond_decoder(const TrajectoryDataset& train, const TrajectoryDataset& pool,
                                const std::optional<CondEmbedConfig>& config, std::size_t m,
                                const BoundingBox& box, Rng& rng) {
  if (pool.empty()) throw std::invalid_argument("run_cond_decoder: empty conditional pool");
  const std::size_t count = config ? config->m : m;
  if (count == 0 || count > pool.size()) {
    throw std::invalid_argument("run_cond_decoder: need 1 <= m <= pool size (m = " + std::to_string(count) +
                                ", pool = " + std::to_string(pool.size()) + ")");
  }
  const Mechanism mech = config ? config->mechanism : Mechanism::laplace;
  const NormType p = norm_for(mech);
  const Eigen::Index d_out = config ? config->d_out : CondEmbedConfig{}.d_out;
  const LinearCodec codec = fit_linear_codec(train, box, d_out, p);

  const auto idx = sample_conditional_indices(pool.size(), count, rng);
  CondDecoderRun out;
  out.real = select_indices(pool, idx);
  out.real.bbox = box;
  const auto coords = normalize_coords(out.real, box);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(coords.size()), codec.compression.in_dim());
  for (std::size_t i = 0; i < coords.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = flatten(coords[i]).transpose();

  Eigen::MatrixXd z;
  if (config) {
    const Eigen::MatrixXd bounded = compress_rows(x, codec.compression, config->clip_bound, p, bounding_for(mech));
    CondEmbedding e = privatize(bounded, *config, pool.size(), rng);
    z = std::move(e.matrix);
    out.budget = e.budget;
  } else {
    z = codec.compression.apply_rows(x);
  }
  const Eigen::MatrixXd decoded = (z * codec.decode_weights).rowwise() + codec.decode_bias.transpose();
  const Eigen::Index len = decoded.cols() / 2;
  std::vector<NormalizedPoints> syn(static_cast<std::size_t>(decoded.rows()), NormalizedPoints(len, 2));
  std::vector<std::string> ids;
  for (Eigen::Index i = 0; i < decoded.rows(); ++i) {
    auto& pts = syn[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < len; ++k) {
      // Decoded points may leave the box; keep them on its edge.
      pts(k, 0) = std::clamp(decoded(i, 2 * k), -1.0, 1.0);
      pts(k, 1) = std::clamp(decoded(i, 2 * k + 1), -1.0, 1.0);
    }
    ids.push_back("dec-" + std::to_string(i));
  }
  out.synthetic = denormalize_coords(syn, box, ids);
  out.synthetic.bbox = box;
  out.synthetic.fixed_length = static_cast<std::size_t>(len);
  return out;
}

std::vector<RunResult> run_case(const CaseConfig& config, const TrajectoryDataset& data) {
  validate(config);
  validate(data);
  if (!data.fixed_length || !data.bbox) {
    throw std::invalid_argument("run_case: dataset must be preprocessed (fixed length and bounding box)");
  }
  const BoundingBox box = *data.bbox;
  const std::size_t length = *data.fixed_length;

  TrajectoryDataset external;
  if (config.generator == Generator::external_file) {
    external = load_dataset(config.external_path);
    for (const auto& t : external.trajectories) {
      if (t.size() != length) {
        throw std::invalid_argument("run_case: external trajectory '" + t.id + "' has length " +
                                    std::to_string(t.size()) + ", expected " + std::to_string(length));
      }
    }
  }

  const auto splits = kfold_split(data, config.k_folds, derive_seed(config.seed, kSplitStream));
  std::vector<RunResult> results;
  for (std::size_t f = 0; f < config.folds; ++f) {
    const TrajectoryDataset train = select_ids(data, splits[f].train_ids);
    const TrajectoryDataset test = select_ids(data, splits[f].test_ids);
    for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      RunResult r;
      r.case_id = config.case_id;
      r.threat_model = config.threat_model;
      r.fold = f;
      r.repetition = rep;
      r.seed = derive_seed(derive_seed(config.seed, f + 1), rep + 1);
      r.eps_s = config.eps_s;
      Rng rng = make_rng(r.seed);

      TrajectoryDataset real;
      TrajectoryDataset syn;
      std::optional<std::vector<std::size_t>> pairing;
      const std::size_t n = std::min(config.n_eval, test.size());
      switch (config.generator) {
        case Generator::markov: {
          real = select_indices(test, sorted_sample(test.size(), n, rng));
          SynthResult s = synthesize_markov(train, config.synth, n, length, rng);
          syn = std::move(s.dataset);
          if (s.model.budget.bounded()) r.budget.train = s.model.budget;
          r.budget.generation = PrivacyBudget{0.0, 0.0, Adjacency::replace_one, PrivacyUnit::trajectory};
          break;
        }
        case Generator::external_file: {
          if (external.size() < n) {
            throw std::invalid_argument("run_case: external file holds " + std::to_string(external.size()) +
                                        " trajectories, need " + std::to_string(n));
          }
          real = select_indices(test, sorted_sample(test.size(), n, rng));
          syn = select_indices(external, sorted_sample(external.size(), n, rng));
          r.budget = planned_budget(config, test.size());
          break;
        }
        case Generator::cond_decoder: {
          CondDecoderRun c = run_cond_decoder(train, test, config.cond_mechanism, n, box, rng);
          real = std::move(c.real);
          syn = std::move(c.synthetic);
          r.budget.generation = c.budget;
          pairing = identity_pairing(real.size());
          break;
        }
      }
      if (r.budget.train.has_value() != requires_train_budget(config.threat_model) ||
          r.budget.generation.has_value() != requires_generation_budget(config.threat_model)) {
        throw std::logic_error("run_case: spent budgets do not match threat model " +
                               to_string(config.threat_model));
      }

      EvalConfig ev = config.eval;
      ev.seed = derive_seed(r.seed, kEvalStream);
      ev.bbox = box;
      if (pairing) {
        r.metrics = evaluate_pair(real, syn, ev, std::span<const std::size_t>(*pairing));
      } else {
        r.metrics = evaluate_pair(real, syn, ev);
      }
      r.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      results.push_back(std::move(r));
    }
  }
  return results;
}

std::vector<CaseSummary> summarize(const std::vector<RunResult>& results) {
  std::vector<std::string> order;
  std::vector<std::vector<const RunResult*>> groups;
  for (const auto& r : results) {
    auto it = std::find(order.begin(), order.end(), r.case_id);
    if (it == order.end()) {
      order.push_back(r.case_id);
      groups.emplace_back();
      groups.back().push_back(&r);
    } else {
      groups[static_cast<std::size_t>(it - order.begin())].push_back(&r);
    }
  }
  std::vector<CaseSummary> out;
  for (std::size_t g = 0; g < order.size(); ++g) {
    CaseSummary s;
    s.case_id = order[g];
    s.runs = groups[g].size();
    const auto n = static_cast<double>(s.runs);
    for (const auto* r : groups[g]) {
      const auto v = r->metrics.values();
      for (std::size_t k = 0; k < v.size(); ++k) s.mean[k] += v[k];
    }
    for (double& m : s.mean) m /= n;
    if (s.runs > 1) {
      const boost::math::students_t dist(n - 1.0);
      const double t = boost::math::quantile(dist, 0.975);
      std::array<double, MetricReport::kFieldCount> ci{};
      for (std::size_t k = 0; k < ci.size(); ++k) {
        double ss = 0.0;
        for (const auto* r : groups[g]) {
          const double dv = r->metrics.values()[k] - s.mean[k];
          ss += dv * dv;
        }
        ci[k] = t * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
      }
      s.ci95 = ci;
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string summary_csv(const std::vector<CaseSummary>& summaries) {
  std::ostringstream out;
  out << "case_id,runs";
  for (const auto& name : MetricReport::column_names()) out << ',' << name << "_mean," << name << "_ci95";
  out << '\n';
  for (const auto& s : summaries) {
    out << s.case_id << ',' << s.runs;
    for (std::size_t k = 0; k < s.mean.size(); ++k) {
      out << ',' << format_double(s.mean[k]) << ',';
      if (s.ci95) out << format_double((*s.ci95)[k]);
    }
    out << '\n';
  }
  return out.str();
}

std::string runs_csv(const std::vector<RunResult>& results) {
  std::ostringstream out;
  out << "case_id,threat_model,fold,repetition,seed";
  for (const auto& name : MetricReport::column_names()) out << ',' << name;
  out << ",train_epsilon,train_delta,generation_epsilon,generation_delta,eps_s_recorded,wall_clock_s\n";
  const auto budget_cells = [&out](const std::optional<PrivacyBudget>& b) {
    if (b) {
      out << ',' << format_double(b->epsilon) << ',' << format_double(b->delta);
    } else {
      out << ",,";
    }
  };
  for (const auto& r : results) {
    out << r.case_id << ',' << to_string(r.threat_model) << ',' << r.fold << ',' << r.repetition << ',' << r.seed;
    for (double v : r.metrics.values()) out << ',' << format_double(v);
    budget_cells(r.budget.train);
    budget_cells(r.budget.generation);
    out << ',';
    if (r.eps_s) out << format_double(*r.eps_s);
    out << ',' << format_double(r.wall_clock_s) << '\n';
  }
  return out.str();
}

void write_report(const std::vector<RunResult>& results, const std::string& path) {
  if (results.empty()) throw std::invalid_argument("write_report: no results");
  write_text(path, summary_csv(summarize(results)));
}

Eigen::MatrixXd density_grid(const TrajectoryDataset& d, const BoundingBox& box, int g) {
  return grid_histogram(d, box, g).counts;
}

std::string density_csv(const Eigen::MatrixXd& grid) {
  std::ostringstream out;
  for (Eigen::Index r = 0; r < grid.rows(); ++r) {
    for (Eigen::Index c = 0; c < grid.cols(); ++c) {
      if (c > 0) out << ',';
      out << format_double(grid(r, c));
    }
    out << '\n';
  }
  return out.str();
}

void emit_density_grid(const TrajectoryDataset& d, int g, const std::string& path, std::optional<BoundingBox> box) {
  if (g < 1) throw std::invalid_argument("emit_density_grid: g must be >= 1");
  Eigen::MatrixXd grid = Eigen::MatrixXd::Zero(g, g);
  if (!d.empty()) {
    const BoundingBox b = box ? *box : (d.bbox ? *d.bbox : enclosing_box(d, d));
    grid = density_grid(d, b, g);
  }
  write_text(path, density_csv(grid));
}

}  // namespace trajdp
