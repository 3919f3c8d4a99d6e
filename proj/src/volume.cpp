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

#include "voxanom/volume.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include <json.hpp>

#include "voxanom/simd/kernels.hpp"

namespace voxanom {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string to_string(const Dims3& d) {
  return "(" + std::to_string(d.x) + "," + std::to_string(d.y) + "," + std::to_string(d.z) + ")";
}

namespace {

void check_spacing(const Spacing& s) {
  for (int i = 0; i < 3; ++i) {
    if (!std::isfinite(s[i]) || s[i] <= 0.0) {
      throw ValidationError("spacing[" + std::to_string(i) + "] must be positive and finite, got " +
                            std::to_string(s[i]));
    }
  }
}

uint32_t to_little_endian(uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

}  // namespace

Volume3D::Volume3D(Dims3 dims, Spacing spacing, float fill)
    : grid_(dims, fill), spacing_(spacing) {
  check_spacing(spacing_);
}

Volume3D::Volume3D(Dims3 dims, Spacing spacing, std::vector<float> data)
    : grid_(dims, std::move(data)), spacing_(spacing) {
  check_spacing(spacing_);
}

Volume3D::Volume3D(Grid3<float> grid, Spacing spacing)
    : grid_(std::move(grid)), spacing_(spacing) {
  check_spacing(spacing_);
}

int64_t Volume3D::first_non_finite() const {
  const auto v = values();
  for (size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) return static_cast<int64_t>(i);
  }
  return -1;
}

bool Volume3D::bitwise_equal(const Volume3D& other) const {
  if (!(dims() == other.dims())) return false;
  if (std::memcmp(spacing_.data(), other.spacing_.data(), sizeof(Spacing)) != 0) return false;
  return size() == 0 ||
         std::memcmp(values().data(), other.values().data(), size() * sizeof(float)) == 0;
}

int64_t ForegroundMask::count() const {
  return std::count(values().begin(), values().end(), uint8_t{1});
}

fs::path sidecar_path(const fs::path& rvol_path) {
  fs::path p = rvol_path;
  p.replace_extension(".json");
  return p;
}

Volume3D read_volume(const fs::path& path) {
  const fs::path side = sidecar_path(path);
  std::ifstream meta_in(side);
  if (!meta_in) throw LoadError("missing sidecar " + side.string());

  json meta;
  try {
    meta = json::parse(meta_in);
  } catch (const json::exception& e) {
    throw LoadError("sidecar " + side.string() + ": " + e.what());
  }

  auto field = [&](const char* key) -> const json& {
    if (!meta.contains(key)) throw LoadError("sidecar " + side.string() + ": missing field '" + key + "'");
    return meta.at(key);
  };

  const json& jd = field("dims");
  const json& js = field("spacing");
  if (!jd.is_array() || jd.size() != 3) throw LoadError("sidecar field 'dims' must be a 3-array");
  if (!js.is_array() || js.size() != 3) throw LoadError("sidecar field 'spacing' must be a 3-array");
  if (field("dtype") != "f32le") throw LoadError("sidecar field 'dtype' must be \"f32le\"");
  if (field("order") != "xyz") throw LoadError("sidecar field 'order' must be \"xyz\"");

  Dims3 dims;
  Spacing spacing{};
  try {
    dims = {jd[0].get<int64_t>(), jd[1].get<int64_t>(), jd[2].get<int64_t>()};
    for (int i = 0; i < 3; ++i) spacing[i] = js[i].get<double>();
  } catch (const json::exception& e) {
    throw LoadError(std::string("sidecar dims/spacing: ") + e.what());
  }
  if (!dims.positive()) throw LoadError("sidecar field 'dims' must be positive, got " + to_string(dims));
  for (int i = 0; i < 3; ++i) {
    if (!std::isfinite(spacing[i]) || spacing[i] <= 0.0) {
      throw LoadError("sidecar field 'spacing[" + std::to_string(i) + "]' must be positive and finite");
    }
  }

  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open payload " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const uint64_t expected = static_cast<uint64_t>(dims.count()) * 4u;
  if (bytes.size() != expected) {
    throw LoadError("payload " + path.string() + " has " + std::to_string(bytes.size()) +
                    " bytes, dims " + to_string(dims) + " require " + std::to_string(expected));
  }

  std::vector<float> data(static_cast<size_t>(dims.count()));
  for (size_t i = 0; i < data.size(); ++i) {
    uint32_t word;
    std::memcpy(&word, bytes.data() + 4 * i, 4);
    word = to_little_endian(word);
    std::memcpy(&data[i], &word, 4);
    if (!std::isfinite(data[i])) {
      throw LoadError("payload " + path.string() + ": non-finite value in field 'data[" +
                      std::to_string(i) + "]'");
    }
  }
  return Volume3D(dims, spacing, std::move(data));
}

void write_volume(const Volume3D& v, const fs::path& path) {
  if (const int64_t bad = v.first_non_finite(); bad >= 0) {
    throw ValidationError("refusing to write non-finite value at data[" + std::to_string(bad) + "]");
  }
  if (!v.dims().positive()) throw ValidationError("refusing to write empty volume");

  std::vector<char> bytes(v.size() * 4);
  const auto vals = v.values();
  for (size_t i = 0; i < vals.size(); ++i) {
    uint32_t word;
    std::memcpy(&word, &vals[i], 4);
    word = to_little_endian(word);
    std::memcpy(bytes.data() + 4 * i, &word, 4);
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());

  json meta;
  meta["dims"] = {v.dims().x, v.dims().y, v.dims().z};
  meta["spacing"] = {v.spacing()[0], v.spacing()[1], v.spacing()[2]};
  meta["dtype"] = "f32le";
  meta["order"] = "xyz";
  const fs::path side = sidecar_path(path);
  std::ofstream mout(side, std::ios::trunc);
  if (!mout) throw IoError("cannot write " + side.string());
  mout << meta.dump() << '\n';
  if (!mout) throw IoError("short write to " + side.string());
}

float sample_trilinear(const Grid3<float>& g, double x, double y, double z) {
  const Dims3& d = g.dims();
  x = std::clamp(x, 0.0, static_cast<double>(d.x - 1));
  y = std::clamp(y, 0.0, static_cast<double>(d.y - 1));
  z = std::clamp(z, 0.0, static_cast<double>(d.z - 1));
  const int64_t x0 = static_cast<int64_t>(std::floor(x));
  const int64_t y0 = static_cast<int64_t>(std::floor(y));
  const int64_t z0 = static_cast<int64_t>(std::floor(z));
  const int64_t x1 = std::min(x0 + 1, d.x - 1);
  const int64_t y1 = std::min(y0 + 1, d.y - 1);
  const int64_t z1 = std::min(z0 + 1, d.z - 1);
  const double fx = x - static_cast<double>(x0);
  const double fy = y - static_cast<double>(y0);
  const double fz = z - static_cast<double>(z0);

  auto lerp = [](double a, double b, double t) { return t == 0.0 ? a : a + (b - a) * t; };
  const double c00 = lerp(g.at(x0, y0, z0), g.at(x1, y0, z0), fx);
  const double c10 = lerp(g.at(x0, y1, z0), g.at(x1, y1, z0), fx);
  const double c01 = lerp(g.at(x0, y0, z1), g.at(x1, y0, z1), fx);
  const double c11 = lerp(g.at(x0, y1, z1), g.at(x1, y1, z1), fx);
  const double c0 = lerp(c00, c10, fy);
  const double c1 = lerp(c01, c11, fy);
  return static_cast<float>(lerp(c0, c1, fz));
}

ResampleResult resample_isotropic(const Volume3D& v, double target) {
  if (!(target > 0.0) || !std::isfinite(target)) {
    throw ValidationError("target spacing must be positive, got " + std::to_string(target));
  }
  ResampleResult result;
  std::array<int64_t, 3> out_dims{};
  std::array<double, 3> ratio{};
  for (int a = 0; a < 3; ++a) {
    const double extent = static_cast<double>(v.dims()[a]) * v.spacing()[a];
    int64_t n = std::llround(extent / target);
    if (n < 1) {
      result.warnings.push_back("axis " + std::to_string(a) + " rounded to 0 voxels; clamped to 1");
      n = 1;
    }
    out_dims[a] = n;
    ratio[a] = target / v.spacing()[a];
  }

  Volume3D out(Dims3{out_dims[0], out_dims[1], out_dims[2]}, {target, target, target});
  for (int64_t z = 0; z < out_dims[2]; ++z) {
    const double sz = (static_cast<double>(z) + 0.5) * ratio[2] - 0.5;
    for (int64_t y = 0; y < out_dims[1]; ++y) {
      const double sy = (static_cast<double>(y) + 0.5) * ratio[1] - 0.5;
      for (int64_t x = 0; x < out_dims[0]; ++x) {
        const double sx = (static_cast<double>(x) + 0.5) * ratio[0] - 0.5;
        out.at(x, y, z) = sample_trilinear(v.grid(), sx, sy, sz);
      }
    }
  }
  result.volume = std::move(out);
  return result;
}

ForegroundMask foreground_mask(const Volume3D& v) {
  ForegroundMask mask(v.dims(), 0);
  const auto in = v.values();
  auto out = mask.values();
  for (size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0f ? 1 : 0;
  return mask;
}

Volume3D min_max_normalize(const Volume3D& v) {
  Volume3D out(v.dims(), v.spacing(), 0.0f);
  if (v.size() == 0) return out;
  const auto& k = simd::active();
  float lo = std::numeric_limits<float>::infinity();
  float hi = -std::numeric_limits<float>::infinity();
  k.minmax(v.values().data(), v.size(), &lo, &hi);
  if (!(hi > lo)) return out;
  k.normalize(v.values().data(), out.values().data(), v.size(), lo, hi - lo);
  // (max - min) rounding can push the top value a hair past 1.
  k.clamp01(out.values().data(), out.size());
  return out;
}

}  // namespace voxanom
