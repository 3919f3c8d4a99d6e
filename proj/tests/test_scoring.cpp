/*
 * Copyright 2026 The voxanom Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "test_support.hpp"
#include "voxanom/scoring.hpp"
#include "voxanom/shapes.hpp"

using namespace voxanom;
using voxanom::testing::TempDir;

namespace {

std::vector<WindowScore> constant_windows(Dims3 vol, const FusionConfig& cfg, float value) {
  std::vector<WindowScore> out;
  for (const auto& w : plan_windows(vol, cfg)) out.push_back({w, Grid3<float>(w.size, value)});
  return out;
}

}  // namespace

TEST_CASE("axis planning") {
  CHECK(plan_axis(256, 160, 0.5) == std::vector<int64_t>{0, 80, 96});
  CHECK(plan_axis(160, 160, 0.5) == std::vector<int64_t>{0});
  CHECK(plan_axis(100, 160, 0.5) == std::vector<int64_t>{0});
  CHECK(plan_axis(64, 16, 0.0) == std::vector<int64_t>{0, 16, 32, 48});
  CHECK(plan_axis(10, 4, 0.99) == std::vector<int64_t>{0, 1, 2, 3, 4, 5, 6});
  CHECK(plan_windows(Dims3::cube(160), {}).size() == 1);

  const auto ws = plan_windows({256, 160, 200}, {});
  REQUIRE(ws.size() == 3 * 1 * 2);
  CHECK(ws[1].start == Index3{80, 0, 0});
  CHECK(ws[3].start == Index3{0, 0, 40});

  FusionConfig bad;
  bad.overlap = 1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = {};
  bad.sigma_fraction = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("windows cover every voxel") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Dims3 vol{rng.uniform_int(1, 40), rng.uniform_int(1, 40), rng.uniform_int(1, 40)};
    FusionConfig cfg;
    cfg.patch = {rng.uniform_int(1, 24), rng.uniform_int(1, 24), rng.uniform_int(1, 24)};
    cfg.overlap = rng.uniform(0.0, 0.9);
    std::vector<std::pair<Dims3, Dims3>> boxes;
    for (const auto& w : plan_windows(vol, cfg)) {
      CHECK(w.start.x + w.size.x <= vol.x);
      CHECK(w.start.y + w.size.y <= vol.y);
      CHECK(w.start.z + w.size.z <= vol.z);
      boxes.emplace_back(w.start, w.size);
    }
    const auto cov = oracle::coverage(vol, boxes);
    CHECK(*std::min_element(cov.begin(), cov.end()) >= 1);
  }
}

TEST_CASE("gaussian profile") {
  const auto p = gaussian_profile(16, 0.125);
  REQUIRE(p.size() == 16);
  for (int64_t i = 0; i < 16; ++i) CHECK(p[static_cast<size_t>(i)] == doctest::Approx(oracle::window_weight(i, 16, 0.125)).epsilon(1e-12));
  CHECK(p[7] == p[8]);
  CHECK(p[0] < p[4]);
}

TEST_CASE("fusion identities") {
  Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const Dims3 vol{rng.uniform_int(4, 36), rng.uniform_int(4, 36), rng.uniform_int(4, 36)};
    FusionConfig cfg;
    cfg.patch = Dims3::cube(rng.uniform_int(2, 20));
    cfg.overlap = rng.uniform(0.0, 0.75);
    const float c = static_cast<float>(rng.uniform());
    const auto fused = fuse_scores(vol, constant_windows(vol, cfg, c), cfg);
    for (float v : fused.values()) CHECK(std::fabs(v - c) <= 1e-6f);
  }

  // One window covering everything returns its scores unchanged.
  const Grid3<float> s = testing::random_volume({9, 7, 5}, 3).grid();
  FusionConfig whole;
  whole.patch = {9, 7, 5};
  const WindowScore one{{{0, 0, 0}, {9, 7, 5}}, s};
  const auto fused = fuse_scores({9, 7, 5}, {&one, 1}, whole);
  for (size_t i = 0; i < s.values().size(); ++i) CHECK(fused.values()[i] == doctest::Approx(s.values()[i]).epsilon(1e-6));
}

TEST_CASE("fusion weights two overlapping windows") {
  FusionConfig cfg;
  cfg.patch = {16, 1, 1};
  const std::vector<WindowScore> ws{{{{0, 0, 0}, {16, 1, 1}}, Grid3<float>({16, 1, 1}, 0.0f)},
                                    {{{8, 0, 0}, {16, 1, 1}}, Grid3<float>({16, 1, 1}, 1.0f)}};
  const auto fused = fuse_scores({24, 1, 1}, ws, cfg);
  for (int64_t x = 8; x < 16; ++x) {
    const double a = std::max(oracle::window_weight(x, 16, 0.125), kFusionWeightFloor);
    const double b = std::max(oracle::window_weight(x - 8, 16, 0.125), kFusionWeightFloor);
    CHECK(fused.at(x, 0, 0) == doctest::Approx(b / (a + b)).epsilon(1e-5));
  }
  CHECK(fused.at(9, 0, 0) < 0.5f);
  CHECK(fused.at(14, 0, 0) > 0.5f);
  CHECK(fused.at(2, 0, 0) == 0.0f);
  CHECK(fused.at(20, 0, 0) == 1.0f);
}

TEST_CASE("fusion preconditions") {
  FusionConfig cfg;
  cfg.patch = Dims3::cube(4);
  const WindowScore corner{{{0, 0, 0}, Dims3::cube(4)}, Grid3<float>(Dims3::cube(4), 0.5f)};
  CHECK_THROWS_AS(fuse_scores(Dims3::cube(6), {&corner, 1}, cfg), ValidationError);
  const WindowScore outside{{{4, 0, 0}, Dims3::cube(4)}, Grid3<float>(Dims3::cube(4), 0.5f)};
  CHECK_THROWS_AS(fuse_scores(Dims3::cube(6), {&outside, 1}, cfg), ValidationError);
  const WindowScore out_of_range{{{0, 0, 0}, Dims3::cube(4)}, Grid3<float>(Dims3::cube(4), 1.5f)};
  CHECK_THROWS_AS(fuse_scores(Dims3::cube(4), {&out_of_range, 1}, cfg), ValidationError);
  const WindowScore wrong_dims{{{0, 0, 0}, Dims3::cube(4)}, Grid3<float>(Dims3::cube(3), 0.5f)};
  CHECK_THROWS_AS(fuse_scores(Dims3::cube(4), {&wrong_dims, 1}, cfg), ValidationError);
}

TEST_CASE("ensemble mean") {
  const ScoreMap a(Grid3<float>(Dims3::cube(3), 0.2f));
  const ScoreMap b(Grid3<float>(Dims3::cube(3), 0.6f));
  const std::vector<ScoreMap> ab{a, b};
  const auto mean_ab = ensemble_mean(ab);
  for (float v : mean_ab.values()) CHECK(v == doctest::Approx(0.4f));
  const std::vector<ScoreMap> just_a{a};
  CHECK(ensemble_mean(just_a).values()[0] == 0.2f);

  std::vector<ScoreMap> maps;
  for (uint64_t s = 0; s < 5; ++s) maps.emplace_back(testing::random_volume(Dims3::cube(4), s).grid());
  const auto forward = ensemble_mean(maps);
  std::reverse(maps.begin(), maps.end());
  std::swap(maps[0], maps[2]);
  const auto shuffled = ensemble_mean(maps);
  CHECK(std::equal(forward.values().begin(), forward.values().end(), shuffled.values().begin()));

  CHECK_THROWS_AS(ensemble_mean(std::vector<ScoreMap>{}), ValidationError);
  const std::vector<ScoreMap> mixed{a, ScoreMap(Grid3<float>(Dims3::cube(2), 0.1f))};
  CHECK_THROWS_AS(ensemble_mean(mixed), ValidationError);
}

TEST_CASE("sample score") {
  CHECK(sample_score(Grid3<float>(Dims3::cube(10), 0.3f)) == doctest::Approx(0.3));
  Grid3<float> g(Dims3::cube(10), 0.0f);
  for (int i = 0; i < 100; ++i) g.values()[static_cast<size_t>(i * 7)] = 1.0f;
  CHECK(sample_score(g) == doctest::Approx(1.0));
  Grid3<float> half(Dims3::cube(10), 0.0f);
  for (int i = 0; i < 50; ++i) half.values()[static_cast<size_t>(i)] = 1.0f;
  CHECK(sample_score(half) == doctest::Approx(0.5));

  Grid3<float> tiny({3, 3, 3}, 0.0f);
  tiny.values()[0] = 0.54f;
  CHECK(sample_score(tiny) == doctest::Approx(0.02));

  // Raising any voxel never lowers the score.
  Grid3<float> r = testing::random_volume(Dims3::cube(8), 4).grid();
  double prev = sample_score(r);
  for (int i = 0; i < 50; ++i) {
    float& v = r.values()[static_cast<size_t>(i * 9)];
    v = std::min(1.0f, v + 0.3f);
    const double now = sample_score(r);
    CHECK(now >= prev);
    prev = now;
  }
}

TEST_CASE("baseline scorer") {
  const auto flat = baseline_gradient_scorer(Volume3D(Dims3::cube(8), kUnitSpacing, 0.7f));
  for (float v : flat.values()) CHECK(v == 0.0f);

  Volume3D step(Dims3::cube(12));
  for (int64_t z = 0; z < 12; ++z)
    for (int64_t y = 0; y < 12; ++y)
      for (int64_t x = 6; x < 12; ++x) step.at(x, y, z) = 1.0f;
  const auto s = baseline_gradient_scorer(step);
  CHECK(s.at(5, 4, 4) == 1.0f);
  CHECK(s.at(6, 4, 4) == 1.0f);
  CHECK(s.at(2, 4, 4) == 0.0f);
  CHECK(s.at(9, 4, 4) == 0.0f);
  for (float v : s.values()) CHECK((v >= 0.0f && v <= 1.0f));

  // A hard-edged bright cube inside a smooth ramp ranks above the ramp.
  Volume3D ramp = testing::ramp_volume(Dims3::cube(24));
  for (int64_t z = 8; z < 14; ++z)
    for (int64_t y = 8; y < 14; ++y)
      for (int64_t x = 8; x < 14; ++x) ramp.at(x, y, z) = 1.0f;
  const auto hs = baseline_gradient_scorer(ramp);
  CHECK(hs.at(8, 10, 10) > hs.at(3, 3, 3));
  CHECK(hs.at(8, 10, 10) > 0.5f);
  CHECK(hs.at(3, 3, 3) < 0.2f);
}

TEST_CASE("sliding window scoring with an identity scorer") {
  const Volume3D v = testing::random_volume({20, 17, 9}, 5);
  FusionConfig cfg;
  cfg.patch = Dims3::cube(8);
  const PatchScorer identity = [](const Grid3<float>& p) { return p; };
  const auto one = sliding_window_score(v, cfg, identity, 1);
  const auto four = sliding_window_score(v, cfg, identity, 4);
  CHECK(std::equal(one.values().begin(), one.values().end(), four.values().begin()));
  for (size_t i = 0; i < v.values().size(); ++i) CHECK(std::fabs(one.values()[i] - v.values()[i]) <= 1e-6f);
}

TEST_CASE("window exchange files") {
  TempDir dir("windows");
  FusionConfig cfg;
  cfg.patch = Dims3::cube(6);
  const Dims3 vol{10, 8, 6};
  const auto planned = plan_windows(vol, cfg);
  int n = 0;
  for (const auto& w : planned) {
    WindowScore ws{w, testing::random_volume(w.size, static_cast<uint64_t>(n)).grid()};
    char id[16];
    std::snprintf(id, sizeof id, "w%03d", n++);
    write_window_score(dir.path(), id, ws, vol);
  }
  const auto set = read_window_dir(dir.path());
  CHECK(set.volume_dims == vol);
  REQUIRE(set.windows.size() == planned.size());
  for (size_t i = 0; i < planned.size(); ++i) {
    CHECK(set.windows[i].window == planned[i]);
    const auto expect = testing::random_volume(planned[i].size, i).grid();
    CHECK(std::equal(expect.values().begin(), expect.values().end(), set.windows[i].scores.values().begin()));
  }
  const auto fused = fuse_scores(set.volume_dims, set.windows, cfg);
  CHECK(fused.dims() == vol);

  std::filesystem::remove(dir / "w000.rvol");
  CHECK_THROWS_AS(read_window_dir(dir.path()), IoError);

  TempDir empty("windows_empty");
  CHECK_THROWS(read_window_dir(empty.path()));
  CHECK_THROWS_AS(read_window_dir(empty / "missing"), IoError);
}
