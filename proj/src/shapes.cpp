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

#include "voxanom/shapes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "voxanom/parallel.hpp"
#include "voxanom/simd/kernels.hpp"
#include "voxanom/volume.hpp"

namespace voxanom {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr double kEdgeEps = 1e-9;

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 multiply(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
  return r;
}

// Rz * Ry * Rx.
Mat3 rotation_matrix(const EulerAngles& e) {
  const double cx = std::cos(e.x), sx = std::sin(e.x);
  const double cy = std::cos(e.y), sy = std::sin(e.y);
  const double cz = std::cos(e.z), sz = std::sin(e.z);
  const Mat3 rx{{{1, 0, 0}, {0, cx, -sx}, {0, sx, cx}}};
  const Mat3 ry{{{cy, 0, sy}, {0, 1, 0}, {-sy, 0, cy}}};
  const Mat3 rz{{{cz, -sz, 0}, {sz, cz, 0}, {0, 0, 1}}};
  return multiply(rz, multiply(ry, rx));
}

std::array<double, 3> center_of(Dims3 d) {
  return {static_cast<double>(d.x) / 2.0, static_cast<double>(d.y) / 2.0,
          static_cast<double>(d.z) / 2.0};
}

// Sets every voxel whose center lies within `r` of `c`.
void stamp_ball(ShapeMask& m, const std::array<double, 3>& c, double r) {
  const Dims3& d = m.dims();
  int64_t lo[3], hi[3];
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::max<int64_t>(0, static_cast<int64_t>(std::floor(c[a] - r - 0.5)));
    hi[a] = std::min<int64_t>(d[a] - 1, static_cast<int64_t>(std::ceil(c[a] + r - 0.5)));
  }
  const double r2 = r * r + kEdgeEps;
  for (int64_t z = lo[2]; z <= hi[2]; ++z) {
    const double dz = static_cast<double>(z) + 0.5 - c[2];
    for (int64_t y = lo[1]; y <= hi[1]; ++y) {
      const double dy = static_cast<double>(y) + 0.5 - c[1];
      const double dyz = dy * dy + dz * dz;
      if (dyz > r2) continue;
      for (int64_t x = lo[0]; x <= hi[0]; ++x) {
        const double dx = static_cast<double>(x) + 0.5 - c[0];
        if (dx * dx + dyz <= r2) m.at(x, y, z) = 1.0f;
      }
    }
  }
}

}  // namespace

int64_t ShapeMask::nonzero_count() const {
  return std::count_if(values().begin(), values().end(), [](float v) { return v > 0.0f; });
}

bool ShapeMask::is_binary() const {
  return std::all_of(values().begin(), values().end(),
                     [](float v) { return v == 0.0f || v == 1.0f; });
}

void BrushParams::validate() const {
  if (steps < 1) throw ValidationError("steps must be >= 1, got " + std::to_string(steps));
  if (!(initial_radius >= 1.0) || !std::isfinite(initial_radius)) {
    throw ValidationError("initial_radius must be >= 1, got " + std::to_string(initial_radius));
  }
  if (!(step_sigma > 0.0) || !std::isfinite(step_sigma)) {
    throw ValidationError("step_sigma must be > 0, got " + std::to_string(step_sigma));
  }
  if (!canvas.positive()) throw ValidationError("canvas must be positive, got " + to_string(canvas));
}

ShapeMask gen_cuboid(Dims3 canvas, std::array<double, 3> extent, EulerAngles rotation) {
  if (!canvas.positive()) throw ValidationError("canvas must be positive");
  for (int a = 0; a < 3; ++a) {
    if (!(extent[a] >= 1.0) || extent[a] > static_cast<double>(canvas[a])) {
      throw ValidationError("cuboid extent[" + std::to_string(a) + "] = " +
                            std::to_string(extent[a]) + " outside [1, " +
                            std::to_string(canvas[a]) + "]");
    }
  }
  ShapeMask m(canvas, 0.0f);
  const Mat3 r = rotation_matrix(rotation);
  const auto c = center_of(canvas);
  for (int64_t z = 0; z < canvas.z; ++z) {
    for (int64_t y = 0; y < canvas.y; ++y) {
      for (int64_t x = 0; x < canvas.x; ++x) {
        const double p[3] = {static_cast<double>(x) + 0.5 - c[0], static_cast<double>(y) + 0.5 - c[1],
                             static_cast<double>(z) + 0.5 - c[2]};
        bool inside = true;
        for (int a = 0; a < 3 && inside; ++a) {
          // Box frame coordinate: (R^T p)_a.
          const double q = r[0][a] * p[0] + r[1][a] * p[1] + r[2][a] * p[2];
          const double h = extent[a] / 2.0;
          inside = q >= -h - kEdgeEps && q < h - kEdgeEps;
        }
        if (inside) m.at(x, y, z) = 1.0f;
      }
    }
  }
  return m;
}

ShapeMask gen_sphere(Dims3 canvas, double radius) {
  if (!canvas.positive()) throw ValidationError("canvas must be positive");
  const double limit = static_cast<double>(canvas.min()) / 2.0;
  if (!(radius >= 1.0) || radius > limit) {
    throw ValidationError("sphere radius " + std::to_string(radius) + " outside [1, " +
                          std::to_string(limit) + "]");
  }
  ShapeMask m(canvas, 0.0f);
  stamp_ball(m, center_of(canvas), radius);
  return m;
}

ShapeMask gen_brush_walk(const BrushParams& params, Rng& rng) {
  params.validate();
  const Dims3& d = params.canvas;
  const double r_max = std::max(1.0, static_cast<double>(d.min()) / 2.0);
  ShapeMask m(d, 0.0f);

  auto pos = center_of(d);
  double r = std::clamp(params.initial_radius, 1.0, r_max);
  stamp_ball(m, pos, r);

  for (int64_t step = 1; step < params.steps; ++step) {
    std::array<double, 3> next{};
    for (int a = 0; a < 3; ++a) {
      next[a] = std::clamp(pos[a] + rng.normal(0.0, params.step_sigma), 0.5,
                           static_cast<double>(d[a]) - 0.5);
    }
    const double next_r = std::clamp(r + rng.normal(0.0, params.step_sigma), 1.0, r_max);

    // The brush is dragged, not lifted: stamps are laid along the segment
    // closely enough that consecutive balls overlap.
    const double dist = std::sqrt((next[0] - pos[0]) * (next[0] - pos[0]) +
                                  (next[1] - pos[1]) * (next[1] - pos[1]) +
                                  (next[2] - pos[2]) * (next[2] - pos[2]));
    const double spacing = std::max(0.5, 0.25 * std::min(r, next_r));
    const int64_t sub = std::max<int64_t>(1, static_cast<int64_t>(std::ceil(dist / spacing)));
    for (int64_t k = 1; k <= sub; ++k) {
      const double t = static_cast<double>(k) / static_cast<double>(sub);
      const std::array<double, 3> c{pos[0] + (next[0] - pos[0]) * t, pos[1] + (next[1] - pos[1]) * t,
                                    pos[2] + (next[2] - pos[2]) * t};
      stamp_ball(m, c, r + (next_r - r) * t);
    }
    pos = next;
    r = next_r;
  }
  return m;
}

ShapeMask random_cuboid(Dims3 canvas, Rng& rng) {
  std::array<double, 3> extent{};
  for (int a = 0; a < 3; ++a) {
    const int64_t lo = std::max<int64_t>(1, canvas[a] / 4);
    extent[a] = static_cast<double>(rng.uniform_int(lo, canvas[a]));
  }
  const double two_pi = 2.0 * std::numbers::pi;
  const EulerAngles rot{rng.uniform(0.0, two_pi), rng.uniform(0.0, two_pi), rng.uniform(0.0, two_pi)};
  return gen_cuboid(canvas, extent, rot);
}

ShapeMask random_sphere(Dims3 canvas, Rng& rng) {
  const double hi = static_cast<double>(canvas.min()) / 2.0;
  const double lo = std::min(hi, std::max(1.0, static_cast<double>(canvas.min()) / 8.0));
  return gen_sphere(canvas, rng.uniform(lo, hi));
}

AffineParams random_affine(Dims3 canvas, const AffineRanges& ranges, Rng& rng) {
  const double two_pi = 2.0 * std::numbers::pi;
  AffineParams a;
  a.rotation = {rng.uniform(0.0, two_pi), rng.uniform(0.0, two_pi), rng.uniform(0.0, two_pi)};
  for (int i = 0; i < 3; ++i) a.scale[i] = rng.uniform(ranges.scale_min, ranges.scale_max);
  for (int i = 0; i < 3; ++i) {
    const double t = ranges.translation_fraction * static_cast<double>(canvas[i]);
    a.translation[i] = rng.uniform(-t, t);
  }
  return a;
}

ShapeMask apply_affine(const ShapeMask& mask, const AffineParams& affine) {
  for (int a = 0; a < 3; ++a) {
    if (!(affine.scale[a] > 0.0) || !std::isfinite(affine.scale[a])) {
      throw ValidationError("affine scale[" + std::to_string(a) + "] must be positive");
    }
  }
  const Dims3& d = mask.dims();
  const Mat3 r = rotation_matrix(affine.rotation);
  const auto c = center_of(d);
  ShapeMask out(d, 0.0f);
  for (int64_t z = 0; z < d.z; ++z) {
    for (int64_t y = 0; y < d.y; ++y) {
      for (int64_t x = 0; x < d.x; ++x) {
        const double p[3] = {static_cast<double>(x) + 0.5 - c[0] - affine.translation[0],
                             static_cast<double>(y) + 0.5 - c[1] - affine.translation[1],
                             static_cast<double>(z) + 0.5 - c[2] - affine.translation[2]};
        int64_t src[3];
        bool inside = true;
        for (int a = 0; a < 3; ++a) {
          const double q = (r[0][a] * p[0] + r[1][a] * p[1] + r[2][a] * p[2]) / affine.scale[a] + c[a];
          src[a] = static_cast<int64_t>(std::floor(q));
          if (src[a] < 0 || src[a] >= d[a]) inside = false;
        }
        if (inside) out.at(x, y, z) = mask.at(src[0], src[1], src[2]);
      }
    }
  }
  return out;
}

ShapeMask augment_shape(const ShapeMask& mask, const AffineParams& affine, Rng& rng,
                        const AffineRanges& ranges) {
  if (!(ranges.scale_min > 0.0) || ranges.scale_max < ranges.scale_min) {
    throw ValidationError("affine scale range must satisfy 0 < min <= max");
  }
  AffineParams attempt = affine;
  for (int i = 0; i < std::max(1, ranges.max_attempts); ++i) {
    if (i > 0) {
      const AffineParams fresh = random_affine(mask.dims(), ranges, rng);
      attempt.rotation = fresh.rotation;
      attempt.scale = fresh.scale;
    }
    ShapeMask out = apply_affine(mask, attempt);
    if (!out.empty_shape()) return out;
  }
  throw GenerationError("affine augmentation produced an empty shape after " +
                        std::to_string(ranges.max_attempts) + " attempts");
}

std::vector<float> gaussian_taps(int size) {
  if (size < 1 || size % 2 == 0) {
    throw ValidationError("Gaussian kernel size must be odd and positive, got " + std::to_string(size));
  }
  const int half = size / 2;
  const double sigma = static_cast<double>(size) / 6.0;
  std::vector<double> w(static_cast<size_t>(size));
  double sum = 0.0;
  for (int k = 0; k < size; ++k) {
    const double t = static_cast<double>(k - half);
    w[static_cast<size_t>(k)] = std::exp(-(t * t) / (2.0 * sigma * sigma));
    sum += w[static_cast<size_t>(k)];
  }
  std::vector<float> taps(static_cast<size_t>(size));
  for (size_t k = 0; k < taps.size(); ++k) taps[k] = static_cast<float>(w[k] / sum);
  return taps;
}

Grid3<float> gaussian_blur(const Grid3<float>& in, int kernel_size) {
  const std::vector<float> taps = gaussian_taps(kernel_size);
  const auto& k = simd::active();
  const Dims3& d = in.dims();
  const int64_t half = kernel_size / 2;
  const size_t nx = static_cast<size_t>(d.x);

  Grid3<float> a(d, 0.0f);
  for (int64_t z = 0; z < d.z; ++z)
    for (int64_t y = 0; y < d.y; ++y)
      k.conv_row(in.row(y, z).data(), a.row(y, z).data(), nx, taps.data(), taps.size());

  // The y and z passes accumulate whole rows; out-of-range taps see zeros.
  Grid3<float> b(d, 0.0f);
  for (int64_t z = 0; z < d.z; ++z)
    for (int64_t y = 0; y < d.y; ++y)
      for (int64_t t = 0; t < kernel_size; ++t) {
        const int64_t src = y + t - half;
        if (src < 0 || src >= d.y) continue;
        k.axpy(b.row(y, z).data(), a.row(src, z).data(), taps[static_cast<size_t>(t)], nx);
      }

  Grid3<float> c(d, 0.0f);
  for (int64_t z = 0; z < d.z; ++z)
    for (int64_t t = 0; t < kernel_size; ++t) {
      const int64_t src = z + t - half;
      if (src < 0 || src >= d.z) continue;
      for (int64_t y = 0; y < d.y; ++y)
        k.axpy(c.row(y, z).data(), b.row(y, src).data(), taps[static_cast<size_t>(t)], nx);
    }
  return c;
}

ShapeMask smooth_mask(const ShapeMask& mask, int kernel_size) {
  ShapeMask out(gaussian_blur(mask, kernel_size));
  simd::active().clamp01(out.values().data(), out.size());
  return out;
}

std::vector<BrushParams> default_brush_grid(Dims3 canvas) {
  const double scale = static_cast<double>(canvas.min()) / 64.0;
  std::vector<BrushParams> grid;
  for (int64_t steps : {10, 20, 40}) {
    for (double r : {2.0, 4.0, 8.0}) {
      for (double sigma : {1.0, 2.0, 4.0}) {
        grid.push_back({steps, std::max(1.0, r * scale), sigma, canvas});
      }
    }
  }
  return grid;
}

ShapeLibrary build_shape_library(int64_t count, std::span<const BrushParams> grid, uint64_t seed,
                                 int workers) {
  if (count < 1) throw ValidationError("shape count must be >= 1, got " + std::to_string(count));
  if (grid.empty()) throw ValidationError("brush parameter grid is empty");
  for (const auto& p : grid) p.validate();

  ShapeLibrary lib;
  lib.seed = seed;
  lib.shapes.resize(static_cast<size_t>(count));
  lib.params_used.resize(static_cast<size_t>(count));
  parallel_for(count, workers, [&](int64_t i) {
    const BrushParams& p = grid[static_cast<size_t>(i) % grid.size()];
    Rng rng(derive_seed(seed, static_cast<uint64_t>(i)));
    lib.shapes[static_cast<size_t>(i)] = gen_brush_walk(p, rng);
    lib.params_used[static_cast<size_t>(i)] = p;
  });
  return lib;
}

namespace {

std::string shape_file_name(size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "shape_%04zu.rvol", i);
  return buf;
}

}  // namespace

void save_shape_library(const ShapeLibrary& lib, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  json entries = json::array();
  for (size_t i = 0; i < lib.shapes.size(); ++i) {
    const std::string name = shape_file_name(i);
    write_volume(Volume3D(lib.shapes[i]), dir / name);
    const BrushParams& p = lib.params_used[i];
    json e;
    e["file"] = name;
    e["steps"] = p.steps;
    e["initial_radius"] = p.initial_radius;
    e["step_sigma"] = p.step_sigma;
    e["canvas"] = {p.canvas.x, p.canvas.y, p.canvas.z};
    e["voxels"] = lib.shapes[i].nonzero_count();
    entries.push_back(std::move(e));
  }
  json doc;
  doc["seed"] = lib.seed;
  doc["count"] = lib.shapes.size();
  doc["entries"] = std::move(entries);
  std::ofstream out(dir / "library.json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "library.json").string());
  out << doc.dump(1) << '\n';
}

ShapeLibrary load_shape_library(const fs::path& dir) {
  std::ifstream in(dir / "library.json");
  if (!in) throw IoError("missing " + (dir / "library.json").string());
  ShapeLibrary lib;
  try {
    const json doc = json::parse(in);
    lib.seed = doc.at("seed").get<uint64_t>();
    for (const auto& e : doc.at("entries")) {
      const Volume3D v = read_volume(dir / e.at("file").get<std::string>());
      ShapeMask m(v.grid());
      BrushParams p;
      p.steps = e.at("steps").get<int64_t>();
      p.initial_radius = e.at("initial_radius").get<double>();
      p.step_sigma = e.at("step_sigma").get<double>();
      const auto& c = e.at("canvas");
      p.canvas = {c.at(0).get<int64_t>(), c.at(1).get<int64_t>(), c.at(2).get<int64_t>()};
      if (!(m.dims() == p.canvas)) throw LoadError("shape " + e.at("file").get<std::string>() + " dims mismatch");
      lib.shapes.push_back(std::move(m));
      lib.params_used.push_back(p);
    }
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("library.json: " + std::string(e.what()));
  }
  if (lib.shapes.empty()) throw LoadError("shape library " + dir.string() + " is empty");
  return lib;
}

}  // namespace voxanom
