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

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "test_support.hpp"
#include "voxanom/volume.hpp"

using namespace voxanom;
using voxanom::testing::TempDir;

namespace {

void write_raw(const std::filesystem::path& p, const std::vector<float>& data) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)));
}

void write_text(const std::filesystem::path& p, const std::string& s) { std::ofstream(p) << s; }

}  // namespace

TEST_CASE("zero volume round trip and payload size") {
  TempDir dir("vol_zero");
  const Volume3D v(Dims3::cube(2));
  write_volume(v, dir / "z.rvol");
  CHECK(std::filesystem::file_size(dir / "z.rvol") == 32);
  const std::string payload = testing::slurp(dir / "z.rvol");
  CHECK(payload == std::string(32, '\0'));
  const Volume3D r = read_volume(dir / "z.rvol");
  CHECK(r.dims() == Dims3::cube(2));
  for (float x : r.values()) CHECK(x == 0.0f);
}

TEST_CASE("round trip is bitwise, including odd values and spacing") {
  TempDir dir("vol_rt");
  Volume3D v = testing::random_volume({5, 3, 7}, 11);
  v.at(0, 0, 0) = -0.0f;
  v.at(1, 0, 0) = std::numeric_limits<float>::denorm_min();
  v.at(2, 0, 0) = 1e30f;
  const Volume3D w({5, 3, 7}, {0.7, 1.25, 3.0}, std::vector<float>(v.values().begin(), v.values().end()));
  write_volume(w, dir / "a.rvol");
  const Volume3D r = read_volume(dir / "a.rvol");
  CHECK(r.bitwise_equal(w));
  CHECK(std::signbit(r.at(0, 0, 0)));
}

TEST_CASE("writes are byte-deterministic") {
  TempDir dir("vol_det");
  const Volume3D v = testing::random_volume({4, 4, 4}, 3);
  write_volume(v, dir / "a.rvol");
  write_volume(v, dir / "b.rvol");
  CHECK(testing::slurp(dir / "a.rvol") == testing::slurp(dir / "b.rvol"));
  CHECK(testing::slurp(dir / "a.json") == testing::slurp(dir / "b.json"));
  CHECK(testing::slurp(dir / "a.json").find("\"order\"") != std::string::npos);
}

TEST_CASE("payload length must match dims") {
  TempDir dir("vol_short");
  write_raw(dir / "s.rvol", std::vector<float>(7, 0.0f));
  write_text(dir / "s.json", R"({"dims":[2,2,2],"spacing":[1,1,1],"dtype":"f32le","order":"xyz"})");
  CHECK_THROWS_AS(read_volume(dir / "s.rvol"), LoadError);
}

TEST_CASE("missing sidecar and bad fields are load errors naming the field") {
  TempDir dir("vol_bad");
  write_raw(dir / "a.rvol", std::vector<float>(8, 0.0f));
  CHECK_THROWS_AS(read_volume(dir / "a.rvol"), LoadError);

  write_text(dir / "a.json", R"({"dims":[2,2,2],"spacing":[1,1,1],"dtype":"f64le","order":"xyz"})");
  CHECK_THROWS_WITH_AS(read_volume(dir / "a.rvol"), doctest::Contains("dtype"), LoadError);

  write_text(dir / "a.json", R"({"dims":[2,2,2],"spacing":[1,0,1],"dtype":"f32le","order":"xyz"})");
  CHECK_THROWS_WITH_AS(read_volume(dir / "a.rvol"), doctest::Contains("spacing"), LoadError);

  write_text(dir / "a.json", R"({"spacing":[1,1,1],"dtype":"f32le","order":"xyz"})");
  CHECK_THROWS_WITH_AS(read_volume(dir / "a.rvol"), doctest::Contains("dims"), LoadError);

  std::vector<float> data(8, 0.0f);
  data[5] = std::numeric_limits<float>::quiet_NaN();
  write_raw(dir / "a.rvol", data);
  write_text(dir / "a.json", R"({"dims":[2,2,2],"spacing":[1,1,1],"dtype":"f32le","order":"xyz"})");
  CHECK_THROWS_WITH_AS(read_volume(dir / "a.rvol"), doctest::Contains("data[5]"), LoadError);
}

TEST_CASE("NaN is refused on write") {
  TempDir dir("vol_nan");
  Volume3D v(Dims3::cube(2));
  v.at(1, 1, 1) = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(write_volume(v, dir / "n.rvol"), ValidationError);
}

TEST_CASE("identity resample keeps dims and values") {
  const Volume3D v = testing::random_volume({6, 5, 4}, 5);
  const auto r = resample_isotropic(v, 1.0);
  CHECK(r.warnings.empty());
  REQUIRE(r.volume.dims() == v.dims());
  for (size_t i = 0; i < v.size(); ++i) CHECK(std::fabs(r.volume.values()[i] - v.values()[i]) <= 1e-6f);
}

TEST_CASE("upsampling doubles dims and keeps constants and bounds") {
  const Volume3D c(Dims3::cube(4), {2, 2, 2}, 0.375f);
  const auto r = resample_isotropic(c, 1.0);
  CHECK(r.volume.dims() == Dims3::cube(8));
  CHECK(r.volume.spacing() == Spacing{1, 1, 1});
  for (float x : r.volume.values()) CHECK(x == doctest::Approx(0.375f).epsilon(1e-6));

  const Volume3D v(testing::random_volume({5, 4, 3}, 9).grid(), {1.3, 0.7, 2.1});
  const auto s = resample_isotropic(v, 0.9);
  const auto [lo, hi] = std::minmax_element(v.values().begin(), v.values().end());
  for (float x : s.volume.values()) {
    CHECK(x >= *lo);
    CHECK(x <= *hi);
  }
}

TEST_CASE("degenerate resample clamps to one voxel with a warning") {
  const Volume3D v({1, 4, 4}, {0.2, 1, 1}, 0.5f);
  const auto r = resample_isotropic(v, 1.0);
  CHECK(r.volume.dims().x == 1);
  CHECK_FALSE(r.warnings.empty());
  CHECK_THROWS_AS(resample_isotropic(v, 0.0), ValidationError);
}

TEST_CASE("foreground mask is exactly the positive voxels") {
  CHECK(foreground_mask(Volume3D(Dims3::cube(3))).count() == 0);
  CHECK(foreground_mask(Volume3D(Dims3::cube(3), kUnitSpacing, 1.0f)).count() == 27);
  Volume3D v(Dims3::cube(3));
  v.at(1, 2, 0) = 0.5f;
  v.at(0, 0, 0) = -0.5f;
  const auto m = foreground_mask(v);
  CHECK(m.count() == 1);
  CHECK(m.at(1, 2, 0) == 1);
}

TEST_CASE("min-max normalization") {
  Volume3D v({3, 1, 1});
  v.at(0, 0, 0) = 0.0f;
  v.at(1, 0, 0) = 5.0f;
  v.at(2, 0, 0) = 10.0f;
  const auto n = min_max_normalize(v);
  CHECK(n.at(0, 0, 0) == 0.0f);
  CHECK(n.at(1, 0, 0) == 0.5f);
  CHECK(n.at(2, 0, 0) == 1.0f);

  const auto flat = min_max_normalize(Volume3D(Dims3::cube(3), kUnitSpacing, 7.0f));
  for (float x : flat.values()) CHECK(x == 0.0f);

  Volume3D u = testing::random_volume({9, 8, 7}, 2);
  u.at(0, 0, 0) = 0.0f;
  u.at(1, 0, 0) = 1.0f;
  const auto un = min_max_normalize(u);
  for (size_t i = 0; i < u.size(); ++i) CHECK(std::fabs(un.values()[i] - u.values()[i]) <= 1e-6f);
}
