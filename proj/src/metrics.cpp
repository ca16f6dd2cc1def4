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

#include "trajdp/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iterator>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/sort/spreadsort/float_sort.hpp>

#include "trajdp/spatial_index.hpp"

namespace trajdp {

namespace {

// Stream ids for the per-metric generators derived from EvalConfig::seed.
constexpr std::uint64_t kSwdStream = 1;
constexpr std::uint64_t kHausdorffStream = 2;
constexpr std::uint64_t kRangeStream = 3;

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, end);
}

bool point_less(const GeoPoint& a, const GeoPoint& b) {
  return a.lat < b.lat || (a.lat == b.lat && a.lon < b.lon);
}

// Points in a canonical order so that sampling does not depend on how the
// dataset happens to be ordered.
std::vector<GeoPoint> canonical_points(const TrajectoryDataset& d) {
  auto pts = flatten_points(d);
  std::sort(pts.begin(), pts.end(), point_less);
  return pts;
}

std::vector<GeoPoint> sample_points(const std::vector<GeoPoint>& pts, std::size_t m, std::uint64_t seed) {
  if (pts.size() <= m) return pts;
  Rng rng = make_rng(seed);
  auto idx = sample_without_replacement(pts.size(), m, rng);
  std::sort(idx.begin(), idx.end());
  std::vector<GeoPoint> out;
  out.reserve(m);
  for (auto i : idx) out.push_back(pts[i]);
  return out;
}

NormalizedPoints to_normalized(std::span<const GeoPoint> pts, const BoundingBox& box) {
  NormalizedPoints out(static_cast<Eigen::Index>(pts.size()), 2);
  for (std::size_t i = 0; i < pts.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = normalize_point(pts[i], box);
  return out;
}

void require_nonempty(const TrajectoryDataset& d, const char* what) {
  if (d.empty()) throw std::invalid_argument(std::string(what) + ": empty dataset");
  for (const auto& t : d.trajectories) {
    if (t.points.empty()) throw std::invalid_argument(std::string(what) + ": empty trajectory '" + t.id + "'");
  }
}

double histogram_jsd(const std::vector<double>& real, const std::vector<double>& syn, int bins) {
  if (real.empty() || syn.empty()) throw std::invalid_argument("histogram_jsd: empty input");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto* v : {&real, &syn}) {
    for (double x : *v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  return jsd(value_histogram(real, lo, hi, bins), value_histogram(syn, lo, hi, bins));
}

template <typename F>
std::vector<double> per_trajectory(const TrajectoryDataset& d, F f) {
  std::vector<double> out;
  out.reserve(d.size());
  for (const auto& t : d.trajectories) out.push_back(f(t));
  return out;
}

}  // namespace

double jsd(const Eigen::Ref<const Eigen::VectorXd>& p, const Eigen::Ref<const Eigen::VectorXd>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("jsd: distributions differ in size");
  if (p.size() == 0) throw std::invalid_argument("jsd: empty distributions");
  if ((p.array() < 0.0).any() || (q.array() < 0.0).any() || !p.allFinite() || !q.allFinite()) {
    throw std::invalid_argument("jsd: weights must be finite and nonnegative");
  }
  const double sp = p.sum();
  const double sq = q.sum();
  if (!(sp > 0.0) || !(sq > 0.0)) throw std::invalid_argument("jsd: zero total mass");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double a = p(i) / sp;
    const double b = q(i) / sq;
    const double m = 0.5 * (a + b);
    if (a > 0.0) acc += a * std::log2(a / m);
    if (b > 0.0) acc += b * std::log2(b / m);
  }
  return std::clamp(0.5 * acc, 0.0, 1.0);
}

Eigen::Vector2i grid_cell(const GeoPoint& p, const BoundingBox& box, int g) {
  const auto bin = [g](double v, double lo, double span) {
    const double f = std::floor((v - lo) / span * g);
    return static_cast<int>(std::clamp(f, 0.0, static_cast<double>(g - 1)));
  };
  return {bin(p.lat, box.lat_min, box.lat_span()), bin(p.lon, box.lon_min, box.lon_span())};
}

GridHistogram grid_histogram(std::span<const GeoPoint> points, const BoundingBox& box, int g) {
  if (g < 1) throw std::invalid_argument("grid_histogram: g must be >= 1");
  validate(box);
  GridHistogram h{g, box, Eigen::MatrixXd::Zero(g, g)};
  for (const auto& p : points) {
    const Eigen::Vector2i c = grid_cell(p, box, g);
    h.counts(c.x(), c.y()) += 1.0;
  }
  return h;
}

GridHistogram grid_histogram(const TrajectoryDataset& d, const BoundingBox& box, int g) {
  const auto pts = flatten_points(d);
  return grid_histogram(pts, box, g);
}

BoundingBox shared_box(const TrajectoryDataset& real, const TrajectoryDataset& syn) {
  if (real.bbox) return *real.bbox;
  if (syn.bbox) return *syn.bbox;
  return enclosing_box(real, syn);
}

double grid_jsd(const TrajectoryDataset& real, const TrajectoryDataset& syn, const BoundingBox& box, int g) {
  require_nonempty(real, "grid_jsd");
  require_nonempty(syn, "grid_jsd");
  const auto hr = grid_histogram(real, box, g);
  const auto hs = grid_histogram(syn, box, g);
  return jsd(hr.counts.reshaped(), hs.counts.reshaped());
}

double grid_jsd(const TrajectoryDataset& real, const TrajectoryDataset& syn, int g) {
  return grid_jsd(real, syn, shared_box(real, syn), g);
}

Eigen::VectorXd value_histogram(std::span<const double> values, double lo, double hi, int bins) {
  if (bins < 1) throw std::invalid_argument("value_histogram: bins must be >= 1");
  if (!(lo <= hi)) throw std::invalid_argument("value_histogram: lo > hi");
  Eigen::VectorXd h = Eigen::VectorXd::Zero(bins);
  const double width = hi - lo;
  for (double v : values) {
    int b = 0;
    if (width > 0.0) {
      const double f = std::floor((v - lo) / width * bins);
      b = static_cast<int>(std::clamp(f, 0.0, static_cast<double>(bins - 1)));
    }
    h(b) += 1.0;
  }
  return h;
}

double sliced_wasserstein(const NormalizedPoints& a, const NormalizedPoints& b, std::size_t n_projections, Rng& rng) {
  if (a.rows() == 0 || b.rows() == 0) throw std::invalid_argument("sliced_wasserstein: empty point set");
  if (n_projections == 0) throw std::invalid_argument("sliced_wasserstein: need at least one projection");
  std::vector<Eigen::Vector2d> dirs;
  dirs.reserve(n_projections);
  for (std::size_t k = 0; k < n_projections; ++k) {
    const double theta = uniform_real(rng, 0.0, 2.0 * std::numbers::pi);
    dirs.emplace_back(std::cos(theta), std::sin(theta));
  }

  const NormalizedPoints* small = &a;
  const NormalizedPoints* large = &b;
  if (a.rows() > b.rows()) std::swap(small, large);
  NormalizedPoints sub;
  if (large->rows() != small->rows()) {
    auto idx = sample_without_replacement(static_cast<std::size_t>(large->rows()),
                                          static_cast<std::size_t>(small->rows()), rng);
    std::sort(idx.begin(), idx.end());
    sub.resize(small->rows(), 2);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      sub.row(static_cast<Eigen::Index>(i)) = large->row(static_cast<Eigen::Index>(idx[i]));
    }
    large = &sub;
  }

  const Eigen::Index n = small->rows();
  Eigen::VectorXd pa(n), pb(n);
  double total = 0.0;
  for (const auto& d : dirs) {
    pa.noalias() = *small * d;
    pb.noalias() = *large * d;
    boost::sort::spreadsort::float_sort(pa.begin(), pa.end());
    boost::sort::spreadsort::float_sort(pb.begin(), pb.end());
    total += (pa - pb).cwiseAbs().mean();
  }
  return total / static_cast<double>(dirs.size());
}

double hausdorff_points(std::span<const GeoPoint> a, std::span<const GeoPoint> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("hausdorff_points: empty point set");
  const SphericalPointIndex ia(a);
  const SphericalPointIndex ib(b);
  double h = 0.0;
  for (const auto& p : a) h = std::max(h, ib.nearest_distance(p));
  for (const auto& p : b) h = std::max(h, ia.nearest_distance(p));
  return h;
}

double hausdorff_points_brute(std::span<const GeoPoint> a, std::span<const GeoPoint> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("hausdorff_points_brute: empty point set");
  const auto directed = [](std::span<const GeoPoint> x, std::span<const GeoPoint> y) {
    double h = 0.0;
    for (const auto& p : x) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : y) best = std::min(best, haversine_distance(p, q));
      h = std::max(h, best);
    }
    return h;
  };
  return std::max(directed(a, b), directed(b, a));
}

double range_query_mre(std::span<const GeoPoint> real, std::span<const GeoPoint> syn, const BoundingBox& box,
                       const RangeQueryConfig& config, Rng& rng) {
  if (real.empty()) throw std::invalid_argument("range_query_mre: empty real point set");
  if (config.n_queries == 0 || config.radii_m.empty()) throw std::invalid_argument("range_query_mre: no queries");
  validate(box);
  const SphericalPointIndex ir(real);
  const SphericalPointIndex is(syn);
  const double s = config.smoothing_fraction * static_cast<double>(real.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < config.n_queries; ++k) {
    const GeoPoint q{uniform_real(rng, box.lat_min, box.lat_max), uniform_real(rng, box.lon_min, box.lon_max)};
    for (double r : config.radii_m) {
      const auto cr = static_cast<double>(ir.count_within(q, r));
      const auto cs = static_cast<double>(syn.empty() ? 0 : is.count_within(q, r));
      const double denom = std::max(cr, s);
      // denom is 0 only when cr is 0 and smoothing is off.
      acc += denom > 0.0 ? std::abs(cs - cr) / denom : (cs > 0.0 ? 1.0 : 0.0);
    }
  }
  return acc / static_cast<double>(config.n_queries * config.radii_m.size());
}

double percentile_linear(std::vector<double> values, double percentile) {
  if (values.empty()) throw std::invalid_argument("percentile_linear: empty input");
  if (!(percentile >= 0.0 && percentile <= 100.0)) throw std::invalid_argument("percentile_linear: out of [0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = percentile / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<std::size_t> hotspot_cells(const GridHistogram& h, double percentile) {
  std::vector<double> nonzero;
  for (Eigen::Index r = 0; r < h.counts.rows(); ++r) {
    for (Eigen::Index c = 0; c < h.counts.cols(); ++c) {
      if (h.counts(r, c) > 0.0) nonzero.push_back(h.counts(r, c));
    }
  }
  std::vector<std::size_t> out;
  if (nonzero.empty()) return out;
  const double threshold = percentile_linear(std::move(nonzero), percentile);
  for (Eigen::Index r = 0; r < h.counts.rows(); ++r) {
    for (Eigen::Index c = 0; c < h.counts.cols(); ++c) {
      if (h.counts(r, c) > threshold) out.push_back(static_cast<std::size_t>(r * h.counts.cols() + c));
    }
  }
  return out;
}

HotspotResult hotspot_sdc(std::span<const GeoPoint> real, std::span<const GeoPoint> syn, const BoundingBox& box,
                          int g, double percentile) {
  if (real.empty() || syn.empty()) throw std::invalid_argument("hotspot_sdc: empty point set");
  const auto hr = hotspot_cells(grid_histogram(real, box, g), percentile);
  const auto hs = hotspot_cells(grid_histogram(syn, box, g), percentile);
  HotspotResult out;
  out.real_hotspots = hr.size();
  out.syn_hotspots = hs.size();
  if (hr.empty() && hs.empty()) {
    out.no_hotspots = true;
    return out;
  }
  std::vector<std::size_t> common;
  std::set_intersection(hr.begin(), hr.end(), hs.begin(), hs.end(), std::back_inserter(common));
  out.sdc = 2.0 * static_cast<double>(common.size()) / static_cast<double>(hr.size() + hs.size());
  return out;
}

Eigen::MatrixXd trajectory_cost_matrix(const TrajectoryDataset& real, const TrajectoryDataset& syn) {
  require_nonempty(real, "trajectory_cost_matrix");
  require_nonempty(syn, "trajectory_cost_matrix");
  const std::size_t len = real.trajectories.front().size();
  for (const auto* d : {&real, &syn}) {
    for (const auto& t : d->trajectories) {
      if (t.size() != len) throw std::invalid_argument("trajectory_cost_matrix: trajectories differ in length");
    }
  }
  const auto n = static_cast<Eigen::Index>(real.size());
  const auto m = static_cast<Eigen::Index>(syn.size());
  Eigen::MatrixXd cost(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& a = real.trajectories[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m; ++j) cost(i, j) = haversine_norm(a, syn.trajectories[static_cast<std::size_t>(j)]);
  }
  return cost;
}

Assignment hungarian_match(const TrajectoryDataset& real, const TrajectoryDataset& syn) {
  if (real.size() != syn.size()) throw std::invalid_argument("hungarian_match: datasets differ in size");
  return solve_assignment(trajectory_cost_matrix(real, syn));
}

double traj_hausdorff(const Trajectory& a, const Trajectory& b) {
  if (a.points.empty() || b.points.empty()) throw std::invalid_argument("traj_hausdorff: empty trajectory");
  // Nearest neighbours by chord length, which orders pairs like the
  // great-circle distance; only the chosen pairs go through haversine.
  const auto units = [](const Trajectory& t) {
    Eigen::Matrix3Xd u(3, static_cast<Eigen::Index>(t.size()));
    for (std::size_t k = 0; k < t.size(); ++k) u.col(static_cast<Eigen::Index>(k)) = unit_vector(t.points[k]);
    return u;
  };
  const Eigen::Matrix3Xd ua = units(a);
  const Eigen::Matrix3Xd ub = units(b);
  const auto directed = [](const Trajectory& x, const Eigen::Matrix3Xd& ux, const Trajectory& y,
                           const Eigen::Matrix3Xd& uy) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < ux.cols(); ++i) {
      Eigen::Index j = 0;
      (uy.colwise() - ux.col(i)).colwise().squaredNorm().minCoeff(&j);
      h = std::max(h, haversine_distance(x.points[static_cast<std::size_t>(i)], y.points[static_cast<std::size_t>(j)]));
    }
    return h;
  };
  return std::max(directed(a, ua, b, ub), directed(b, ub, a, ua));
}

double haversine_norm(const Trajectory& a, const Trajectory& b) {
  if (a.points.empty()) throw std::invalid_argument("haversine_norm: empty trajectory");
  if (a.size() != b.size()) throw std::invalid_argument("haversine_norm: trajectories differ in length");
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += haversine_distance(a.points[k], b.points[k]);
  return acc / static_cast<double>(a.size());
}

double dtw(const Trajectory& a, const Trajectory& b) {
  if (a.points.empty() || b.points.empty()) throw std::invalid_argument("dtw: empty trajectory");
  const std::size_t m = b.size();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, kInf), cur(m + 1, kInf);
  prev[0] = 0.0;
  for (const auto& p : a.points) {
    cur[0] = kInf;
    for (std::size_t j = 1; j <= m; ++j) {
      cur[j] = haversine_distance(p, b.points[j - 1]) + std::min({prev[j], cur[j - 1], prev[j - 1]});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double total_travel_distance(const Trajectory& t) {
  double acc = 0.0;
  for (std::size_t k = 1; k < t.size(); ++k) acc += haversine_distance(t.points[k - 1], t.points[k]);
  return acc;
}

double trajectory_diameter(const Trajectory& t) {
  double best = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = i + 1; j < t.size(); ++j) best = std::max(best, haversine_distance(t.points[i], t.points[j]));
  }
  return best;
}

double ttd_jsd(const TrajectoryDataset& real, const TrajectoryDataset& syn, int bins) {
  require_nonempty(real, "ttd_jsd");
  require_nonempty(syn, "ttd_jsd");
  return histogram_jsd(per_trajectory(real, total_travel_distance), per_trajectory(syn, total_travel_distance), bins);
}

double diameter_jsd(const TrajectoryDataset& real, const TrajectoryDataset& syn, int bins) {
  require_nonempty(real, "diameter_jsd");
  require_nonempty(syn, "diameter_jsd");
  return histogram_jsd(per_trajectory(real, trajectory_diameter), per_trajectory(syn, trajectory_diameter), bins);
}

double trip_error(const TrajectoryDataset& real, const TrajectoryDataset& syn, const BoundingBox& box, int g) {
  require_nonempty(real, "trip_error");
  require_nonempty(syn, "trip_error");
  if (g < 1) throw std::invalid_argument("trip_error: g must be >= 1");
  validate(box);
  const auto cells = static_cast<Eigen::Index>(g) * g;
  const auto pairs = [&](const TrajectoryDataset& d) {
    Eigen::VectorXd h = Eigen::VectorXd::Zero(cells * cells);
    for (const auto& t : d.trajectories) {
      const Eigen::Vector2i s = grid_cell(t.points.front(), box, g);
      const Eigen::Vector2i e = grid_cell(t.points.back(), box, g);
      h((s.x() * g + s.y()) * cells + e.x() * g + e.y()) += 1.0;
    }
    return h;
  };
  return jsd(pairs(real), pairs(syn));
}

double trip_error(const TrajectoryDataset& real, const TrajectoryDataset& syn, int g) {
  return trip_error(real, syn, shared_box(real, syn), g);
}

void validate(const EvalConfig& c) {
  if (c.grid_g < 1 || c.hotspot_g < 1 || c.trip_g < 1 || c.hist_bins < 1) {
    throw std::invalid_argument("EvalConfig: grid sizes and bin counts must be >= 1");
  }
  if (c.swd_projections == 0) throw std::invalid_argument("EvalConfig: swd_projections must be >= 1");
  if (c.hausdorff_sample == 0) throw std::invalid_argument("EvalConfig: hausdorff_sample must be >= 1");
  if (c.range.n_queries == 0 || c.range.radii_m.empty()) throw std::invalid_argument("EvalConfig: no range queries");
  for (double r : c.range.radii_m) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw std::invalid_argument("EvalConfig: radii must be finite and >= 0");
  }
  if (!(c.range.smoothing_fraction >= 0.0)) throw std::invalid_argument("EvalConfig: smoothing_fraction < 0");
  if (!(c.hotspot_percentile >= 0.0 && c.hotspot_percentile <= 100.0)) {
    throw std::invalid_argument("EvalConfig: hotspot_percentile outside [0, 100]");
  }
  if (c.bbox) validate(*c.bbox);
}

nlohmann::json to_json(const EvalConfig& c) {
  nlohmann::json j{{"seed", c.seed},
                   {"grid_g", c.grid_g},
                   {"swd_projections", c.swd_projections},
                   {"hausdorff_sample", c.hausdorff_sample},
                   {"range_queries", c.range.n_queries},
                   {"range_radii_m", c.range.radii_m},
                   {"range_smoothing_fraction", c.range.smoothing_fraction},
                   {"hotspot_g", c.hotspot_g},
                   {"hotspot_percentile", c.hotspot_percentile},
                   {"hist_bins", c.hist_bins},
                   {"trip_g", c.trip_g},
                   {"jsd_log_base", 2},
                   {"swd_units", "bbox-normalized [-1,1]"}};
  if (c.bbox) j["bbox"] = {c.bbox->lat_min, c.bbox->lon_min, c.bbox->lat_max, c.bbox->lon_max};
  return j;
}

EvalConfig eval_config_from_json(const nlohmann::json& j) {
  EvalConfig c;
  c.seed = j.value("seed", c.seed);
  c.grid_g = j.value("grid_g", c.grid_g);
  c.swd_projections = j.value("swd_projections", c.swd_projections);
  c.hausdorff_sample = j.value("hausdorff_sample", c.hausdorff_sample);
  c.range.n_queries = j.value("range_queries", c.range.n_queries);
  c.range.radii_m = j.value("range_radii_m", c.range.radii_m);
  c.range.smoothing_fraction = j.value("range_smoothing_fraction", c.range.smoothing_fraction);
  c.hotspot_g = j.value("hotspot_g", c.hotspot_g);
  c.hotspot_percentile = j.value("hotspot_percentile", c.hotspot_percentile);
  c.hist_bins = j.value("hist_bins", c.hist_bins);
  c.trip_g = j.value("trip_g", c.trip_g);
  if (j.contains("bbox") && !j.at("bbox").is_null()) {
    const auto b = j.at("bbox").get<std::array<double, 4>>();
    c.bbox = BoundingBox{b[0], b[1], b[2], b[3]};
  }
  validate(c);
  return c;
}

std::array<double, MetricReport::kFieldCount> MetricReport::values() const {
  return {jsd, swd, hd_points, range_mre, hotspot_sdc, hd_traj, haversine_norm, dtw, ttd_jsd, diameter_jsd, trip_error};
}

const std::array<std::string, MetricReport::kFieldCount>& MetricReport::column_names() {
  static const std::array<std::string, kFieldCount> names{"JSD",       "SWD",  "HD(P)", "Range", "Hotspot", "HD(T)",
                                                          "Haversine", "DTW", "TTD",   "TD",    "TE"};
  return names;
}

MetricReport MetricReport::from_values(const std::array<double, kFieldCount>& v) {
  MetricReport r;
  r.jsd = v[0];
  r.swd = v[1];
  r.hd_points = v[2];
  r.range_mre = v[3];
  r.hotspot_sdc = v[4];
  r.hd_traj = v[5];
  r.haversine_norm = v[6];
  r.dtw = v[7];
  r.ttd_jsd = v[8];
  r.diameter_jsd = v[9];
  r.trip_error = v[10];
  return r;
}

std::string csv_header() {
  std::string out = "case_id";
  for (const auto& n : MetricReport::column_names()) out += "," + n;
  return out;
}

std::string csv_row(const std::string& case_id, const MetricReport& r) {
  std::string out = case_id;
  for (double v : r.values()) out += "," + format_double(v);
  return out;
}

namespace {

const std::array<const char*, MetricReport::kFieldCount> kJsonKeys{
    "jsd",     "swd",           "hd_points", "range_mre", "hotspot_sdc", "hd_traj",
    "haversine_norm", "dtw", "ttd_jsd",   "diameter_jsd", "trip_error"};

}  // namespace

nlohmann::json to_json(const MetricReport& r) {
  nlohmann::json j = nlohmann::json::object();
  const auto v = r.values();
  for (std::size_t i = 0; i < v.size(); ++i) j[kJsonKeys[i]] = v[i];
  j["hotspot_warning"] = r.hotspot_warning;
  return j;
}

MetricReport metric_report_from_json(const nlohmann::json& j) {
  std::array<double, MetricReport::kFieldCount> v{};
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = j.at(kJsonKeys[i]).get<double>();
  MetricReport r = MetricReport::from_values(v);
  r.hotspot_warning = j.value("hotspot_warning", false);
  return r;
}

std::vector<std::size_t> identity_pairing(std::size_t n) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  return p;
}

MetricReport evaluate_pair(const TrajectoryDataset& real, const TrajectoryDataset& syn, const EvalConfig& config,
                           std::optional<std::span<const std::size_t>> pairing) {
  validate(config);
  require_nonempty(real, "evaluate_pair");
  require_nonempty(syn, "evaluate_pair");
  const BoundingBox box = config.bbox.value_or(shared_box(real, syn));
  validate(box);

  std::vector<std::size_t> matched;
  if (pairing) {
    if (pairing->size() != real.size()) throw std::invalid_argument("evaluate_pair: pairing size differs from real");
    for (auto j : *pairing) {
      if (j >= syn.size()) throw std::invalid_argument("evaluate_pair: pairing index out of range");
    }
    matched.assign(pairing->begin(), pairing->end());
  } else {
    matched = hungarian_match(real, syn).row_to_col;
  }

  MetricReport r;
  r.jsd = grid_jsd(real, syn, box, config.grid_g);

  const auto real_pts = canonical_points(real);
  const auto syn_pts = canonical_points(syn);
  {
    Rng rng = make_rng(derive_seed(config.seed, kSwdStream));
    r.swd = sliced_wasserstein(to_normalized(real_pts, box), to_normalized(syn_pts, box), config.swd_projections, rng);
  }
  {
    // Same stream for both sides: identical inputs give identical samples.
    const std::uint64_t s = derive_seed(config.seed, kHausdorffStream);
    r.hd_points = hausdorff_points(sample_points(real_pts, config.hausdorff_sample, s),
                                   sample_points(syn_pts, config.hausdorff_sample, s));
  }
  {
    Rng rng = make_rng(derive_seed(config.seed, kRangeStream));
    r.range_mre = range_query_mre(real_pts, syn_pts, box, config.range, rng);
  }
  const auto hot = hotspot_sdc(real_pts, syn_pts, box, config.hotspot_g, config.hotspot_percentile);
  r.hotspot_sdc = hot.sdc;
  r.hotspot_warning = hot.no_hotspots;

  double hd = 0.0, hav = 0.0, dt = 0.0;
  for (std::size_t i = 0; i < real.size(); ++i) {
    const auto& a = real.trajectories[i];
    const auto& b = syn.trajectories[matched[i]];
    hd += traj_hausdorff(a, b);
    hav += haversine_norm(a, b);
    dt += dtw(a, b);
  }
  const auto n = static_cast<double>(real.size());
  r.hd_traj = hd / n;
  r.haversine_norm = hav / n;
  r.dtw = dt / n;

  r.ttd_jsd = ttd_jsd(real, syn, config.hist_bins);
  r.diameter_jsd = diameter_jsd(real, syn, config.hist_bins);
  r.trip_error = trip_error(real, syn, box, config.trip_g);
  return r;
}

}  // namespace trajdp
