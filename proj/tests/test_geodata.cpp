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
#include <filesystem>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "oracle_values.hpp"
#include "test_support.hpp"
#include "trajdp/geodata.hpp"

namespace trajdp {
namespace {

using testing::kTestBox;

TEST(Haversine, IdenticalPointsAreZero) {
  EXPECT_EQ(haversine_distance({41.15, -8.61}, {41.15, -8.61}), 0.0);
}

TEST(Haversine, OneDegreeOfLongitudeOnTheEquator) {
  EXPECT_NEAR(haversine_distance({0, 0}, {0, 1}), oracle::kHaversine_1deg_equator, 1e-6);
}

TEST(Haversine, Antipodal) {
  EXPECT_NEAR(haversine_distance({0, 0}, {0, 180}), oracle::kHaversine_antipodal, 1e-4);
}

TEST(Haversine, SymmetricAndTriangleOnRandomTriples) {
  Rng rng = make_rng(11);
  const BoundingBox world{-89.0, -179.0, 89.0, 179.0};
  for (int i = 0; i < 2000; ++i) {
    const GeoPoint a = testing::random_point(world, rng);
    const GeoPoint b = testing::random_point(world, rng);
    const GeoPoint c = testing::random_point(world, rng);
    const double ab = haversine_distance(a, b);
    EXPECT_EQ(ab, haversine_distance(b, a));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, (haversine_distance(a, c) + haversine_distance(c, b)) * (1.0 + 1e-6));
  }
}

TEST(Resample, TwoPointsUnchanged) {
  const Trajectory t{"a", {{0, 0}, {0, 1}}};
  EXPECT_EQ(resample_to_length(t, 2), t);
}

TEST(Resample, MidpointOfStraightSegment) {
  const auto r = resample_to_length(Trajectory{"a", {{0, 0}, {0, 1}}}, 3);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r.points[1], (GeoPoint{0, 0.5}));
}

TEST(Resample, SameLengthIsIdentity) {
  Rng rng = make_rng(3);
  const auto t = testing::random_walk("w", 100, kTestBox, rng);
  EXPECT_EQ(resample_to_length(t, 100), t);
}

TEST(Resample, LengthAndEndpointsForRandomInputs) {
  Rng rng = make_rng(5);
  for (int i = 0; i < 300; ++i) {
    const auto t = testing::random_walk("w", 2 + uniform_index(rng, 60), kTestBox, rng);
    const std::size_t target = 2 + uniform_index(rng, 120);
    const auto r = resample_to_length(t, target);
    ASSERT_EQ(r.size(), target);
    EXPECT_EQ(r.points.front(), t.points.front());
    EXPECT_EQ(r.points.back(), t.points.back());
    EXPECT_EQ(r.id, t.id);
  }
}

TEST(Resample, RejectsSinglePoint) {
  EXPECT_THROW(resample_to_length(Trajectory{"s", {{1, 1}}}, 5), std::invalid_argument);
  EXPECT_THROW(resample_to_length(Trajectory{"s", {{1, 1}, {1, 2}}}, 1), std::invalid_argument);
}

TEST(FilterBbox, KeepsInsideDropsAnyOutside) {
  TrajectoryDataset d;
  d.trajectories.push_back({"in", {{41.15, -8.6}, {41.16, -8.61}}});
  d.trajectories.push_back({"out", {{41.15, -8.6}, {41.30, -8.61}}});
  const auto f = filter_bbox(d, kTestBox);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f.trajectories[0].id, "in");
  EXPECT_EQ(*f.bbox, kTestBox);
  EXPECT_TRUE(filter_bbox(TrajectoryDataset{}, kTestBox).empty());
}

TEST(FilterBbox, AllInsideUnchanged) {
  Rng rng = make_rng(8);
  const auto d = testing::random_dataset(20, 10, rng);
  EXPECT_EQ(filter_bbox(d, kTestBox).trajectories, d.trajectories);
}

TEST(Preprocess, FiltersAndResamples) {
  TrajectoryDataset d;
  d.trajectories.push_back({"a", {{41.15, -8.6}, {41.16, -8.61}, {41.17, -8.62}}});
  d.trajectories.push_back({"single", {{41.15, -8.6}}});
  d.trajectories.push_back({"outside", {{40.0, -8.6}, {41.16, -8.61}}});
  const auto p = preprocess(d, porto_preset().bbox, porto_preset().length);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p.trajectories[0].size(), 100u);
  EXPECT_EQ(p.fixed_length, 100u);
  EXPECT_NO_THROW(validate(p));
}

TEST(Presets, BoxesAndLengths) {
  EXPECT_EQ(porto_preset().bbox, (BoundingBox{41.10, -8.72, 41.24, -8.50}));
  EXPECT_EQ(porto_preset().length, 100u);
  EXPECT_EQ(geolife_preset().bbox, (BoundingBox{39.75, 116.19, 40.03, 116.56}));
  EXPECT_EQ(geolife_preset().length, 200u);
  EXPECT_FALSE(find_preset("nowhere").has_value());
}

TEST(Normalize, CornerAndCenter) {
  const Eigen::Vector2d corner = normalize_point({kTestBox.lat_min, kTestBox.lon_min}, kTestBox);
  EXPECT_EQ(corner, Eigen::Vector2d(-1, -1));
  const GeoPoint center{0.5 * (kTestBox.lat_min + kTestBox.lat_max), 0.5 * (kTestBox.lon_min + kTestBox.lon_max)};
  EXPECT_NEAR(normalize_point(center, kTestBox).norm(), 0.0, 1e-12);
}

TEST(Normalize, RoundTripWithinTolerance) {
  Rng rng = make_rng(21);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const GeoPoint p = testing::random_point(kTestBox, rng);
    const GeoPoint q = denormalize_point(normalize_point(p, kTestBox), kTestBox);
    worst = std::max({worst, std::abs(p.lat - q.lat), std::abs(p.lon - q.lon)});
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(Normalize, OutsidePointIsAnError) {
  TrajectoryDataset d;
  d.trajectories.push_back({"x", {{42.0, -8.6}}});
  EXPECT_THROW(normalize_coords(d, kTestBox), std::invalid_argument);
}

TEST(Normalize, DatasetRoundTrip) {
  Rng rng = make_rng(22);
  const auto d = testing::random_dataset(5, 7, rng);
  std::vector<std::string> ids;
  for (const auto& t : d.trajectories) ids.push_back(t.id);
  const auto back = denormalize_coords(normalize_coords(d, kTestBox), kTestBox, ids);
  ASSERT_EQ(back.size(), d.size());
  EXPECT_EQ(back.fixed_length, 7u);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t k = 0; k < 7; ++k) {
      EXPECT_NEAR(back.trajectories[i].points[k].lat, d.trajectories[i].points[k].lat, 1e-9);
      EXPECT_NEAR(back.trajectories[i].points[k].lon, d.trajectories[i].points[k].lon, 1e-9);
    }
  }
}

TEST(KFold, TenIntoFive) {
  Rng rng = make_rng(1);
  const auto d = testing::random_dataset(10, 3, rng);
  const auto folds = kfold_split(d, 5, 42);
  ASSERT_EQ(folds.size(), 5u);
  std::set<std::string> all;
  for (const auto& f : folds) {
    EXPECT_EQ(f.test_ids.size(), 2u);
    EXPECT_EQ(f.train_ids.size(), 8u);
    for (const auto& id : f.test_ids) EXPECT_TRUE(all.insert(id).second);
  }
  EXPECT_EQ(all.size(), 10u);
}

TEST(KFold, Deterministic) {
  Rng rng = make_rng(1);
  const auto d = testing::random_dataset(17, 3, rng);
  const auto a = kfold_split(d, 5, 9);
  const auto b = kfold_split(d, 5, 9);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].test_ids, b[i].test_ids);
    EXPECT_EQ(a[i].train_ids, b[i].train_ids);
  }
}

TEST(KFold, TwoFoldsOnFiveItems) {
  Rng rng = make_rng(1);
  const auto d = testing::random_dataset(5, 3, rng);
  const auto folds = kfold_split(d, 2, 0);
  std::multiset<std::size_t> sizes{folds[0].test_ids.size(), folds[1].test_ids.size()};
  EXPECT_EQ(sizes, (std::multiset<std::size_t>{2, 3}));
}

TEST(KFold, PartitionPropertyOverRandomKAndSeeds) {
  Rng rng = make_rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 60);
    const std::size_t k = 2 + uniform_index(rng, n - 1);
    const auto d = testing::random_dataset(n, 2, rng);
    const auto folds = kfold_split(d, k, rng());
    std::set<std::string> seen;
    std::size_t lo = n, hi = 0;
    for (const auto& f : folds) {
      lo = std::min(lo, f.test_ids.size());
      hi = std::max(hi, f.test_ids.size());
      EXPECT_EQ(f.test_ids.size() + f.train_ids.size(), n);
      std::set<std::string> train(f.train_ids.begin(), f.train_ids.end());
      for (const auto& id : f.test_ids) {
        EXPECT_FALSE(train.contains(id));
        EXPECT_TRUE(seen.insert(id).second);
      }
    }
    EXPECT_EQ(seen.size(), n);
    EXPECT_LE(hi - lo, 1u);
  }
}

TEST(KFold, TooFewTrajectories) {
  Rng rng = make_rng(1);
  const auto d = testing::random_dataset(3, 2, rng);
  EXPECT_THROW(kfold_split(d, 5, 0), std::invalid_argument);
  EXPECT_THROW(kfold_split(d, 1, 0), std::invalid_argument);
}

TEST(DatasetIo, EmptyTextIsEmptyDataset) {
  EXPECT_TRUE(parse_dataset("", FileFormat::jsonl).empty());
  EXPECT_TRUE(parse_dataset("", FileFormat::csv).empty());
}

TEST(DatasetIo, OneJsonlRecord) {
  const auto d = parse_dataset(R"({"id":"a","points":[[41.1,-8.6],[41.2,-8.61],[41.15,-8.7]]})", FileFormat::jsonl);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.trajectories[0].size(), 3u);
  EXPECT_EQ(d.fixed_length, 3u);
}

TEST(DatasetIo, CsvGroupsById) {
  const auto d = parse_dataset("id,seq,lat,lon\nb,0,41.1,-8.6\nb,1,41.2,-8.7\na,0,41.15,-8.65\n", FileFormat::csv);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.trajectories[0].id, "b");
  EXPECT_EQ(d.trajectories[0].size(), 2u);
  EXPECT_FALSE(d.fixed_length.has_value());
}

TEST(DatasetIo, MalformedRowNamesLine) {
  try {
    parse_dataset("{\"id\":\"a\",\"points\":[[1,2]]}\n{\"id\":\"b\",\"points\":[[1]]}\n", FileFormat::jsonl);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  try {
    parse_dataset("id,seq,lat,lon\na,0,41.1,-8.6\na,1,north,-8.6\n", FileFormat::csv);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(DatasetIo, RoundTripIsBitExact) {
  Rng rng = make_rng(31);
  auto d = testing::random_dataset(25, 9, rng);
  d.bbox.reset();
  for (auto format : {FileFormat::jsonl, FileFormat::csv}) {
    const auto back = parse_dataset(serialize_dataset(d, format), format);
    EXPECT_EQ(back, d);
  }
}

TEST(DatasetIo, FileRoundTrip) {
  Rng rng = make_rng(32);
  auto d = testing::random_dataset(4, 5, rng);
  d.bbox.reset();
  const auto dir = std::filesystem::temp_directory_path() / "trajdp_geodata_test";
  std::filesystem::create_directories(dir);
  for (const char* name : {"d.jsonl", "d.csv"}) {
    const auto path = (dir / name).string();
    save_dataset(d, path);
    EXPECT_EQ(load_dataset(path), d);
  }
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace trajdp
