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

#include "trajdp/geodata.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "trajdp/random.hpp"

namespace trajdp {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, std::size_t line) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(line, "not a number: '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

void infer_fixed_length(TrajectoryDataset& d) {
  if (d.empty()) return;
  const std::size_t len = d.trajectories.front().size();
  for (const auto& t : d.trajectories) {
    if (t.size() != len) return;
  }
  d.fixed_length = len;
}

TrajectoryDataset parse_jsonl(std::string_view text) {
  TrajectoryDataset d;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = trim(text.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!rec.is_object() || !rec.contains("id") || !rec.contains("points")) {
      throw ParseError(line_no, "record needs \"id\" and \"points\"");
    }
    Trajectory t;
    if (rec["id"].is_string()) {
      t.id = rec["id"].get<std::string>();
    } else if (rec["id"].is_number_integer()) {
      t.id = std::to_string(rec["id"].get<long long>());
    } else {
      throw ParseError(line_no, "\"id\" must be a string");
    }
    const auto& pts = rec["points"];
    if (!pts.is_array()) throw ParseError(line_no, "\"points\" must be an array");
    t.points.reserve(pts.size());
    for (const auto& p : pts) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
        throw ParseError(line_no, "each point must be [lat, lon]");
      }
      GeoPoint g{p[0].get<double>(), p[1].get<double>()};
      if (!is_valid(g)) throw ParseError(line_no, "coordinate out of range");
      t.points.push_back(g);
    }
    if (t.points.empty()) throw ParseError(line_no, "trajectory has no points");
    d.trajectories.push_back(std::move(t));
    if (end == text.size()) break;
  }
  infer_fixed_length(d);
  return d;
}

TrajectoryDataset parse_csv(std::string_view text) {
  struct Row {
    long long seq;
    GeoPoint p;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Row>> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = trim(text.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (line.empty()) continue;
    auto cols = split_csv(line);
    if (!header_seen) {
      header_seen = true;
      if (cols.size() == 4 && trim(cols[0]) == "id") continue;
    }
    if (cols.size() != 4) throw ParseError(line_no, "expected 4 columns id,seq,lat,lon");
    std::string id(trim(cols[0]));
    std::string_view seq_text = trim(cols[1]);
    long long seq = 0;
    auto res = std::from_chars(seq_text.data(), seq_text.data() + seq_text.size(), seq);
    if (res.ec != std::errc() || res.ptr != seq_text.data() + seq_text.size()) {
      throw ParseError(line_no, "seq must be an integer");
    }
    GeoPoint g{parse_double(cols[2], line_no), parse_double(cols[3], line_no)};
    if (!is_valid(g)) throw ParseError(line_no, "coordinate out of range");
    auto [it, inserted] = rows.try_emplace(id);
    if (inserted) order.push_back(id);
    if (!it->second.empty() && it->second.back().seq >= seq) {
      throw ParseError(line_no, "rows of one id must be sorted by increasing seq");
    }
    it->second.push_back({seq, g});
  }
  TrajectoryDataset d;
  d.trajectories.reserve(order.size());
  for (const auto& id : order) {
    Trajectory t{id, {}};
    for (const auto& r : rows[id]) t.points.push_back(r.p);
    d.trajectories.push_back(std::move(t));
  }
  infer_fixed_length(d);
  return d;
}

}  // namespace

bool is_valid(const GeoPoint& p) {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 && p.lon >= -180.0 &&
         p.lon <= 180.0;
}

void validate(const BoundingBox& box) {
  if (!(box.lat_min < box.lat_max) || !(box.lon_min < box.lon_max)) {
    throw std::invalid_argument("bounding box requires lat_min < lat_max and lon_min < lon_max");
  }
}

DatasetPreset porto_preset() { return {"porto", {41.10, -8.72, 41.24, -8.50}, 100}; }

DatasetPreset geolife_preset() { return {"geolife", {39.75, 116.19, 40.03, 116.56}, 200}; }

std::optional<DatasetPreset> find_preset(std::string_view name) {
  if (name == "porto") return porto_preset();
  if (name == "geolife") return geolife_preset();
  return std::nullopt;
}

std::size_t TrajectoryDataset::point_count() const {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.size();
  return n;
}

void validate(const TrajectoryDataset& d) {
  if (d.bbox) validate(*d.bbox);
  for (const auto& t : d.trajectories) {
    if (t.points.empty()) throw std::invalid_argument("trajectory '" + t.id + "' is empty");
    if (d.fixed_length && t.size() != *d.fixed_length) {
      throw std::invalid_argument("trajectory '" + t.id + "' violates the fixed length");
    }
    for (const auto& p : t.points) {
      if (!is_valid(p)) throw std::invalid_argument("trajectory '" + t.id + "' has an invalid coordinate");
      if (d.bbox && !d.bbox->contains(p)) {
        throw std::invalid_argument("trajectory '" + t.id + "' leaves the bounding box");
      }
    }
  }
}

std::vector<GeoPoint> flatten_points(const TrajectoryDataset& d) {
  std::vector<GeoPoint> out;
  out.reserve(d.point_count());
  for (const auto& t : d.trajectories) out.insert(out.end(), t.points.begin(), t.points.end());
  return out;
}

BoundingBox enclosing_box(const TrajectoryDataset& a, const TrajectoryDataset& b) {
  BoundingBox box{90.0, 180.0, -90.0, -180.0};
  bool any = false;
  for (const auto* d : {&a, &b}) {
    for (const auto& t : d->trajectories) {
      for (const auto& p : t.points) {
        box.lat_min = std::min(box.lat_min, p.lat);
        box.lat_max = std::max(box.lat_max, p.lat);
        box.lon_min = std::min(box.lon_min, p.lon);
        box.lon_max = std::max(box.lon_max, p.lon);
        any = true;
      }
    }
  }
  if (!any) throw std::invalid_argument("enclosing_box: both datasets are empty");
  constexpr double kMargin = 1e-9;
  if (box.lat_max - box.lat_min < kMargin) {
    box.lat_min -= kMargin;
    box.lat_max += kMargin;
  }
  if (box.lon_max - box.lon_min < kMargin) {
    box.lon_min -= kMargin;
    box.lon_max += kMargin;
  }
  return box;
}

double haversine_distance(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(0.5 * dphi);
  const double s2 = std::sin(0.5 * dlambda);
  const double h = std::min(1.0, s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2);
  return 2.0 * kEarthRadiusMeters * std::asin(std::sqrt(h));
}

Trajectory resample_to_length(const Trajectory& t, std::size_t target_length) {
  if (t.size() < 2) {
    throw std::invalid_argument("resample_to_length: trajectory '" + t.id + "' has fewer than two points");
  }
  if (target_length < 2) throw std::invalid_argument("resample_to_length: target length must be at least 2");
  Trajectory out{t.id, {}};
  out.points.resize(target_length);
  const double last_src = static_cast<double>(t.size() - 1);
  const double last_dst = static_cast<double>(target_length - 1);
  out.points.front() = t.points.front();
  out.points.back() = t.points.back();
  for (std::size_t k = 1; k + 1 < target_length; ++k) {
    const double pos = static_cast<double>(k) * last_src / last_dst;
    auto i = static_cast<std::size_t>(std::floor(pos));
    if (i >= t.size() - 1) i = t.size() - 2;
    const double w = pos - static_cast<double>(i);
    const GeoPoint& p0 = t.points[i];
    const GeoPoint& p1 = t.points[i + 1];
    if (w == 0.0) {
      out.points[k] = p0;
    } else {
      out.points[k] = {p0.lat + w * (p1.lat - p0.lat), p0.lon + w * (p1.lon - p0.lon)};
    }
  }
  return out;
}

TrajectoryDataset resample_dataset(const TrajectoryDataset& d, std::size_t target_length) {
  TrajectoryDataset out;
  out.bbox = d.bbox;
  out.fixed_length = target_length;
  out.trajectories.reserve(d.size());
  for (const auto& t : d.trajectories) out.trajectories.push_back(resample_to_length(t, target_length));
  return out;
}

TrajectoryDataset filter_bbox(const TrajectoryDataset& d, const BoundingBox& box) {
  validate(box);
  TrajectoryDataset out;
  out.fixed_length = d.fixed_length;
  out.bbox = box;
  for (const auto& t : d.trajectories) {
    if (std::all_of(t.points.begin(), t.points.end(), [&](const GeoPoint& p) { return box.contains(p); })) {
      out.trajectories.push_back(t);
    }
  }
  return out;
}

TrajectoryDataset preprocess(const TrajectoryDataset& d, const BoundingBox& box, std::size_t length) {
  TrajectoryDataset inside = filter_bbox(d, box);
  std::erase_if(inside.trajectories, [](const Trajectory& t) { return t.size() < 2; });
  return resample_dataset(inside, length);
}

Eigen::Vector2d normalize_point(const GeoPoint& p, const BoundingBox& box) {
  return {2.0 * (p.lat - box.lat_min) / box.lat_span() - 1.0, 2.0 * (p.lon - box.lon_min) / box.lon_span() - 1.0};
}

GeoPoint denormalize_point(const Eigen::Ref<const Eigen::Vector2d>& u, const BoundingBox& box) {
  return {box.lat_min + 0.5 * (u.x() + 1.0) * box.lat_span(), box.lon_min + 0.5 * (u.y() + 1.0) * box.lon_span()};
}

NormalizedPoints normalize_points(std::span<const GeoPoint> points, const BoundingBox& box) {
  validate(box);
  NormalizedPoints out(static_cast<Eigen::Index>(points.size()), 2);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!box.contains(points[i])) throw std::invalid_argument("normalize: point outside the bounding box");
    out.row(static_cast<Eigen::Index>(i)) = normalize_point(points[i], box).transpose();
  }
  return out;
}

std::vector<NormalizedPoints> normalize_coords(const TrajectoryDataset& d, const BoundingBox& box) {
  std::vector<NormalizedPoints> out;
  out.reserve(d.size());
  for (const auto& t : d.trajectories) out.push_back(normalize_points(t.points, box));
  return out;
}

TrajectoryDataset denormalize_coords(const std::vector<NormalizedPoints>& coords, const BoundingBox& box,
                                     std::span<const std::string> ids) {
  validate(box);
  if (!ids.empty() && ids.size() != coords.size()) {
    throw std::invalid_argument("denormalize_coords: id count does not match trajectory count");
  }
  TrajectoryDataset out;
  out.bbox = box;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    Trajectory t{ids.empty() ? std::to_string(i) : ids[i], {}};
    t.points.reserve(static_cast<std::size_t>(coords[i].rows()));
    for (Eigen::Index r = 0; r < coords[i].rows(); ++r) {
      t.points.push_back(denormalize_point(coords[i].row(r).transpose(), box));
    }
    out.trajectories.push_back(std::move(t));
  }
  infer_fixed_length(out);
  return out;
}

std::vector<FoldSplit> kfold_split(const TrajectoryDataset& d, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("kfold_split: k must be at least 2");
  if (d.size() < k) throw std::invalid_argument("kfold_split: fewer trajectories than folds");
  {
    std::unordered_set<std::string> seen;
    for (const auto& t : d.trajectories) {
      if (!seen.insert(t.id).second) throw std::invalid_argument("kfold_split: duplicate id '" + t.id + "'");
    }
  }
  Rng rng = make_rng(seed);
  std::vector<std::size_t> order = sample_without_replacement(d.size(), d.size(), rng);
  std::vector<FoldSplit> folds(k);
  for (std::size_t f = 0; f < k; ++f) folds[f].fold_index = f;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const std::string& id = d.trajectories[order[pos]].id;
    const std::size_t fold = pos % k;
    for (std::size_t f = 0; f < k; ++f) {
      (f == fold ? folds[f].test_ids : folds[f].train_ids).push_back(id);
    }
  }
  return folds;
}

TrajectoryDataset select_ids(const TrajectoryDataset& d, std::span<const std::string> ids) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < d.size(); ++i) index.emplace(d.trajectories[i].id, i);
  TrajectoryDataset out;
  out.fixed_length = d.fixed_length;
  out.bbox = d.bbox;
  out.trajectories.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) throw std::invalid_argument("select_ids: unknown id '" + id + "'");
    out.trajectories.push_back(d.trajectories[it->second]);
  }
  return out;
}

TrajectoryDataset select_indices(const TrajectoryDataset& d, std::span<const std::size_t> indices) {
  TrajectoryDataset out;
  out.fixed_length = d.fixed_length;
  out.bbox = d.bbox;
  out.trajectories.reserve(indices.size());
  for (auto i : indices) out.trajectories.push_back(d.trajectories.at(i));
  return out;
}

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

FileFormat format_from_path(std::string_view path) {
  return path.ends_with(".csv") ? FileFormat::csv : FileFormat::jsonl;
}

TrajectoryDataset parse_dataset(std::string_view text, FileFormat format) {
  return format == FileFormat::csv ? parse_csv(text) : parse_jsonl(text);
}

std::string serialize_dataset(const TrajectoryDataset& d, FileFormat format) {
  std::string out;
  if (format == FileFormat::csv) {
    out += "id,seq,lat,lon\n";
    for (const auto& t : d.trajectories) {
      for (std::size_t i = 0; i < t.size(); ++i) {
        out += t.id;
        out += ',';
        out += std::to_string(i);
        out += ',';
        out += format_double(t.points[i].lat);
        out += ',';
        out += format_double(t.points[i].lon);
        out += '\n';
      }
    }
    return out;
  }
  for (const auto& t : d.trajectories) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : t.points) pts.push_back({p.lat, p.lon});
    nlohmann::json rec = {{"id", t.id}, {"points", std::move(pts)}};
    out += rec.dump();
    out += '\n';
  }
  return out;
}

TrajectoryDataset load_dataset(const std::string& path, FileFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), format);
}

TrajectoryDataset load_dataset(const std::string& path) { return load_dataset(path, format_from_path(path)); }

void save_dataset(const TrajectoryDataset& d, const std::string& path, FileFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset file '" + path + "'");
  out << serialize_dataset(d, format);
}

void save_dataset(const TrajectoryDataset& d, const std::string& path) {
  save_dataset(d, path, format_from_path(path));
}

}  // namespace trajdp
