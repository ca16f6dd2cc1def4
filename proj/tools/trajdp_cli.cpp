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


// trajdp command-line front end. Every subcommand prints a JSON summary on
// stdout; failures print {"error": {...}} on stderr and exit nonzero.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "trajdp/cond_embed.hpp"
#include "trajdp/dp_core.hpp"
#include "trajdp/geodata.hpp"
#include "trajdp/harness.hpp"
#include "trajdp/markov_synth.hpp"
#include "trajdp/metrics.hpp"
#include "trajdp/random.hpp"
#include "trajdp/worlds.hpp"

namespace {

using nlohmann::json;
using namespace trajdp;

constexpr int kExitUsage = 2;
constexpr int kExitFailure = 1;

struct Globals {
  std::uint64_t seed = 0;
  bool secure = false;
  std::string config;
  std::string dataset;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void print_error(const std::string& type, const std::string& message, int code) {
  const json e{{"error", {{"type", type}, {"message", message}, {"exit_code", code}}}};
  std::cerr << e.dump() << std::endl;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("'" + path + "': " + e.what());
  }
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
}

Rng make_generator(const Globals& g) { return g.secure ? make_secure_rng() : make_rng(g.seed); }

// A seed for code paths that take one: from OS entropy under --secure.
std::uint64_t effective_seed(const Globals& g) {
  if (!g.secure) return g.seed;
  Rng rng = make_secure_rng();
  return rng();
}

json seed_json(const Globals& g, std::uint64_t used) {
  return g.secure ? json{{"secure", true}} : json{{"secure", false}, {"seed", used}};
}

// --dataset names a file or the built-in "two-cluster" world.
TrajectoryDataset load_named_dataset(const std::string& name, const Globals& g) {
  if (name.empty()) throw UsageError("--dataset is required");
  if (name == "two-cluster") {
    Rng rng = make_rng(g.seed);
    return two_cluster_world(TwoClusterConfig{}, rng);
  }
  if (find_preset(name)) {
    throw UsageError("preset '" + name + "' carries a box and length but no data; pass a file with --dataset and "
                     "the preset with --preset");
  }
  return load_dataset(name);
}

BoundingBox parse_bbox(const std::vector<double>& v) {
  if (v.size() != 4) throw UsageError("--bbox takes lat_min lon_min lat_max lon_max");
  BoundingBox b{v[0], v[1], v[2], v[3]};
  validate(b);
  return b;
}

// Files do not store a box: take --bbox, else the data's own extent.
void ensure_box(TrajectoryDataset& d, const std::vector<double>& bbox) {
  if (!bbox.empty()) {
    d.bbox = parse_bbox(bbox);
  } else if (!d.bbox && !d.empty()) {
    d.bbox = enclosing_box(d, d);
  }
}

json dataset_summary(const TrajectoryDataset& d) {
  json j{{"trajectories", d.size()}, {"points", d.point_count()}};
  j["fixed_length"] = d.fixed_length ? json(*d.fixed_length) : json(nullptr);
  j["bbox"] = d.bbox ? json{d.bbox->lat_min, d.bbox->lon_min, d.bbox->lat_max, d.bbox->lon_max} : json(nullptr);
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trajdp: differentially private trajectory synthesis and evaluation"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Base seed for every random draw")->default_val(0);
  app.add_flag("--secure", g.secure, "Draw randomness from OS entropy instead of --seed");
  app.add_option("--config", g.config, "JSON configuration file");
  app.add_option("--dataset", g.dataset, "Dataset file (.jsonl or .csv) or the built-in world 'two-cluster'");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Parse and validate raw trajectories, write canonical JSONL/CSV");
  std::string ingest_out;
  ingest->add_option("--out", ingest_out, "Output file")->required();

  // preprocess
  auto* prep = app.add_subcommand("preprocess", "Filter to a bounding box and resample to a fixed length");
  std::string prep_out, prep_preset;
  std::vector<double> prep_bbox;
  std::size_t prep_length = 0;
  prep->add_option("--out", prep_out, "Output file")->required();
  prep->add_option("--preset", prep_preset, "porto or geolife (box and length)");
  prep->add_option("--bbox", prep_bbox, "lat_min lon_min lat_max lon_max")->expected(4);
  prep->add_option("--length", prep_length, "Points per trajectory");

  // split
  auto* split = app.add_subcommand("split", "k-fold split by trajectory id");
  std::size_t split_k = 5;
  std::string split_out, split_dir;
  split->add_option("--k", split_k, "Number of folds")->default_val(5);
  split->add_option("--out", split_out, "Split JSON (fold ids)")->required();
  split->add_option("--materialize", split_dir, "Also write fold_<i>_{train,test}.jsonl into this directory");

  // synthesize
  auto* synth = app.add_subcommand("synthesize", "Fit the DP grid/Markov synthesizer and generate trajectories");
  std::size_t synth_count = 3000, synth_length = 0;
  std::optional<double> synth_eps;
  std::string synth_out, synth_model;
  synth->add_option("--count", synth_count, "Trajectories to generate")->default_val(3000);
  synth->add_option("--length", synth_length, "Output length (default: the dataset's fixed length)");
  synth->add_option("--epsilon", synth_eps, "Total budget (overrides the config; 'inf' disables noise)");
  synth->add_option("--out", synth_out, "Synthetic dataset file")->required();
  synth->add_option("--model-out", synth_model, "Write grid, count tables and budget as JSON");
  std::vector<double> synth_bbox;
  synth->add_option("--bbox", synth_bbox, "lat_min lon_min lat_max lon_max (default: data extent)")->expected(4);

  // privatize-cond
  auto* priv = app.add_subcommand("privatize-cond", "Compress and privatize conditional inputs");
  std::string priv_out, priv_train, priv_decoded;
  priv->add_option("--out", priv_out, "Privatized embeddings JSON")->required();
  priv->add_option("--train", priv_train, "Fit the compression map to this dataset (else a seeded random map)");
  priv->add_option("--decoded-out", priv_decoded, "Decode the noisy embeddings to trajectories (needs --train)");
  std::vector<double> priv_bbox;
  priv->add_option("--bbox", priv_bbox, "lat_min lon_min lat_max lon_max (default: data extent)")->expected(4);

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Score a synthetic dataset against a real one");
  std::string eval_real, eval_syn, eval_out, eval_pairing = "hungarian", eval_case = "eval";
  eval->add_option("--real", eval_real, "Real dataset file")->required();
  eval->add_option("--syn", eval_syn, "Synthetic dataset file")->required();
  eval->add_option("--pairing", eval_pairing, "hungarian or identity")->check(CLI::IsMember({"hungarian", "identity"}));
  eval->add_option("--case-id", eval_case, "Case id for the CSV row");
  eval->add_option("--out", eval_out, "Report JSON file");
  std::vector<double> eval_bbox;
  eval->add_option("--bbox", eval_bbox, "lat_min lon_min lat_max lon_max (default: joint extent)")->expected(4);

  // report
  auto* report = app.add_subcommand("report", "Run configured cases and tabulate, or tabulate saved runs");
  std::string report_dir, report_runs, report_out;
  report->add_option("--out-dir", report_dir, "Write runs.jsonl, runs.csv and summary.csv here");
  report->add_option("--runs", report_runs, "Tabulate an existing runs.jsonl instead of running cases");
  report->add_option("--out", report_out, "Summary CSV path (with --runs)");

  // density
  auto* dens = app.add_subcommand("density", "Export a g x g point-count grid as CSV");
  int dens_g = 64;
  std::string dens_out;
  std::vector<double> dens_bbox;
  dens->add_option("--g", dens_g, "Grid resolution")->default_val(64);
  dens->add_option("--out", dens_out, "CSV file")->required();
  dens->add_option("--bbox", dens_bbox, "lat_min lon_min lat_max lon_max")->expected(4);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and friends surface as parse errors with exit code 0.
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error("usage", e.what(), kExitUsage);
    return kExitUsage;
  }

  try {
    json result;
    if (*ingest) {
      const auto d = load_named_dataset(g.dataset, g);
      validate(d);
      save_dataset(d, ingest_out);
      result = {{"command", "ingest"}, {"out", ingest_out}, {"dataset", dataset_summary(d)}};
    } else if (*prep) {
      BoundingBox box;
      std::size_t length = prep_length;
      if (!prep_preset.empty()) {
        const auto p = find_preset(prep_preset);
        if (!p) throw UsageError("unknown preset '" + prep_preset + "' (expected porto or geolife)");
        box = p->bbox;
        if (length == 0) length = p->length;
      }
      if (!prep_bbox.empty()) box = parse_bbox(prep_bbox);
      if (prep_preset.empty() && prep_bbox.empty()) throw UsageError("preprocess needs --preset or --bbox");
      if (length < 2) throw UsageError("preprocess needs --length >= 2 (or a preset)");
      const auto raw = load_named_dataset(g.dataset, g);
      const auto d = preprocess(raw, box, length);
      save_dataset(d, prep_out);
      result = {{"command", "preprocess"},
                {"out", prep_out},
                {"input_trajectories", raw.size()},
                {"dataset", dataset_summary(d)}};
    } else if (*split) {
      const auto d = load_named_dataset(g.dataset, g);
      const std::uint64_t seed = effective_seed(g);
      const auto folds = kfold_split(d, split_k, seed);
      json j{{"k", split_k}, {"randomness", seed_json(g, seed)}, {"folds", json::array()}};
      for (const auto& f : folds) {
        j["folds"].push_back({{"fold", f.fold_index}, {"train_ids", f.train_ids}, {"test_ids", f.test_ids}});
      }
      write_json_file(split_out, j);
      if (!split_dir.empty()) {
        std::filesystem::create_directories(split_dir);
        for (const auto& f : folds) {
          const auto base = std::filesystem::path(split_dir) / ("fold_" + std::to_string(f.fold_index));
          save_dataset(select_ids(d, f.train_ids), base.string() + "_train.jsonl");
          save_dataset(select_ids(d, f.test_ids), base.string() + "_test.jsonl");
        }
      }
      result = {{"command", "split"}, {"out", split_out}, {"k", split_k}, {"trajectories", d.size()}};
    } else if (*synth) {
      auto d = load_named_dataset(g.dataset, g);
      ensure_box(d, synth_bbox);
      SynthConfig cfg;
      if (!g.config.empty()) cfg = synth_config_from_json(read_json_file(g.config));
      if (synth_eps) cfg.eps_total = *synth_eps;
      validate(cfg);
      const std::size_t length = synth_length ? synth_length : d.fixed_length.value_or(0);
      if (length < 2) throw UsageError("synthesize needs --length or a fixed-length dataset");
      Rng rng = make_generator(g);
      const auto s = synthesize_markov(d, cfg, synth_count, length, rng);
      save_dataset(s.dataset, synth_out);
      if (!synth_model.empty()) {
        write_json_file(synth_model, {{"config", to_json(cfg)}, {"grid", s.grid.to_json()}, {"model", s.model.to_json()}});
      }
      result = {{"command", "synthesize"},
                {"out", synth_out},
                {"count", s.dataset.size()},
                {"leaves", s.grid.leaf_count()},
                {"budget", to_json(s.model.budget)},
                {"randomness", seed_json(g, g.seed)}};
    } else if (*priv) {
      if (g.config.empty()) throw UsageError("privatize-cond needs --config with the mechanism settings");
      const auto cfg = cond_config_from_json(read_json_file(g.config));
      auto d = load_named_dataset(g.dataset, g);
      ensure_box(d, priv_bbox);
      validate(d);
      if (!d.fixed_length || !d.bbox) throw UsageError("privatize-cond needs a preprocessed dataset");
      if (!priv_decoded.empty() && priv_train.empty()) throw UsageError("--decoded-out needs --train");
      Rng rng = make_generator(g);
      json j;
      if (!priv_train.empty()) {
        const auto train = load_dataset(priv_train);
        auto run = run_cond_decoder(train, d, cfg, cfg.m, *d.bbox, rng);
        if (!priv_decoded.empty()) save_dataset(run.synthetic, priv_decoded);
        j["real_ids"] = json::array();
        for (const auto& t : run.real.trajectories) j["real_ids"].push_back(t.id);
        j["budget"] = to_json(*run.budget);
      } else {
        const Eigen::Index in_dim = 2 * static_cast<Eigen::Index>(*d.fixed_length);
        const auto comp = CompressionMap::random(in_dim, cfg.d_out, rng);
        const auto decomp = DecompressionMap::random(cfg.d_out, cfg.embedding_dim, rng);
        const auto res = run_cond_pipeline(d, *d.bbox, comp, decomp, cfg, rng);
        json rows = json::array();
        for (Eigen::Index i = 0; i < res.embedding.matrix.rows(); ++i) {
          json row = json::array();
          for (Eigen::Index k = 0; k < res.embedding.matrix.cols(); ++k) row.push_back(res.embedding.matrix(i, k));
          rows.push_back(std::move(row));
        }
        j["indices"] = res.indices;
        j["embeddings"] = std::move(rows);
        j["compression"] = comp.to_json();
        j["budget"] = to_json(res.embedding.budget);
      }
      const auto spec = noise_spec_for(cfg, d.size());
      j["config"] = to_json(cfg);
      j["noise"] = {{"mechanism", to_string(spec.mechanism)}, {"scale", spec.scale}, {"clip_bound", spec.clip_bound}};
      j["randomness"] = seed_json(g, g.seed);
      write_json_file(priv_out, j);
      result = {{"command", "privatize-cond"}, {"out", priv_out}, {"budget", j["budget"]}};
    } else if (*eval) {
      const auto real = load_dataset(eval_real);
      const auto syn = load_dataset(eval_syn);
      EvalConfig cfg;
      if (!g.config.empty()) cfg = eval_config_from_json(read_json_file(g.config));
      cfg.seed = effective_seed(g);
      if (!eval_bbox.empty()) cfg.bbox = parse_bbox(eval_bbox);
      MetricReport r;
      if (eval_pairing == "identity") {
        if (real.size() != syn.size()) throw std::invalid_argument("identity pairing needs equal dataset sizes");
        const auto p = identity_pairing(real.size());
        r = evaluate_pair(real, syn, cfg, std::span<const std::size_t>(p));
      } else {
        r = evaluate_pair(real, syn, cfg);
      }
      json j{{"case_id", eval_case}, {"metrics", to_json(r)}, {"settings", to_json(cfg)},
             {"csv_header", csv_header()}, {"csv_row", csv_row(eval_case, r)}};
      if (!eval_out.empty()) write_json_file(eval_out, j);
      result = j;
    } else if (*report) {
      if (!report_runs.empty()) {
        std::ifstream in(report_runs, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open '" + report_runs + "'");
        std::vector<RunResult> runs;
        std::string line;
        while (std::getline(in, line)) {
          if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
          runs.push_back(run_result_from_json(json::parse(line)));
        }
        if (report_out.empty()) throw UsageError("report --runs needs --out");
        write_report(runs, report_out);
        result = {{"command", "report"}, {"runs", runs.size()}, {"out", report_out}};
      } else {
        if (g.config.empty()) throw UsageError("report needs --config (cases) or --runs");
        if (report_dir.empty()) throw UsageError("report needs --out-dir");
        auto cases = load_cases(g.config);
        auto d = load_named_dataset(g.dataset, g);
        ensure_box(d, {});
        std::filesystem::create_directories(report_dir);
        std::vector<RunResult> runs;
        std::ofstream jl(std::filesystem::path(report_dir) / "runs.jsonl", std::ios::binary);
        for (auto& c : cases) {
          if (g.secure) c.seed = effective_seed(g);
          for (auto& r : run_case(c, d)) {
            jl << to_json(r).dump() << '\n';
            std::cerr << "case " << r.case_id << " fold " << r.fold << " rep " << r.repetition << " done in "
                      << r.wall_clock_s << " s\n";
            runs.push_back(std::move(r));
          }
        }
        write_text_file((std::filesystem::path(report_dir) / "runs.csv").string(), runs_csv(runs));
        write_report(runs, (std::filesystem::path(report_dir) / "summary.csv").string());
        result = {{"command", "report"}, {"cases", cases.size()}, {"runs", runs.size()}, {"out_dir", report_dir}};
      }
    } else if (*dens) {
      const auto d = load_named_dataset(g.dataset, g);
      std::optional<BoundingBox> box;
      if (!dens_bbox.empty()) box = parse_bbox(dens_bbox);
      emit_density_grid(d, dens_g, dens_out, box);
      result = {{"command", "density"}, {"out", dens_out}, {"g", dens_g}, {"points", d.point_count()}};
    }
    std::cout << result.dump(2) << std::endl;
    return 0;
  } catch (const UsageError& e) {
    print_error("usage", e.what(), kExitUsage);
    return kExitUsage;
  } catch (const ParseError& e) {
    print_error("parse", e.what(), kExitFailure);
    return kExitFailure;
  } catch (const std::invalid_argument& e) {
    print_error("invalid_argument", e.what(), kExitFailure);
    return kExitFailure;
  } catch (const json::exception& e) {
    print_error("config", e.what(), kExitFailure);
    return kExitFailure;
  } catch (const std::exception& e) {
    print_error("runtime", e.what(), kExitFailure);
    return kExitFailure;
  }
}
