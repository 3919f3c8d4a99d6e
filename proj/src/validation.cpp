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

#include "voxanom/validation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "voxanom/corruption.hpp"
#include "voxanom/parallel.hpp"

namespace voxanom {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string_view to_string(AnomalyFamily f) {
  switch (f) {
    case AnomalyFamily::kHealthy:
      return "healthy";
    case AnomalyFamily::kAddNoise:
      return "add_noise";
    case AnomalyFamily::kAddNoiseSmooth:
      return "add_noise_smooth";
    case AnomalyFamily::kDeform:
      return "deform";
    case AnomalyFamily::kReflect:
      return "reflect";
    case AnomalyFamily::kShift:
      return "shift";
    case AnomalyFamily::kUniformNoise:
      return "uniform_noise";
    case AnomalyFamily::kUniformNoiseSmooth:
      return "uniform_noise_smooth";
  }
  return "?";
}

std::optional<AnomalyFamily> parse_family(std::string_view s) {
  for (AnomalyFamily f : kAllFamilies)
    if (to_string(f) == s) return f;
  return std::nullopt;
}

bool is_smoothed_family(AnomalyFamily f) {
  return f == AnomalyFamily::kAddNoiseSmooth || f == AnomalyFamily::kUniformNoiseSmooth;
}

namespace {

void check_region(const Volume3D& x, const Region& r) {
  const Dims3& rd = r.mask.dims();
  const Dims3& d = x.dims();
  if (!rd.positive() || r.corner.x < 0 || r.corner.y < 0 || r.corner.z < 0 ||
      r.corner.x + rd.x > d.x || r.corner.y + rd.y > d.y || r.corner.z + rd.z > d.z) {
    throw ValidationError("region " + to_string(rd) + " at " + to_string(r.corner) +
                          " does not fit image " + to_string(d));
  }
  if (r.mask.empty_shape()) throw ValidationError("validation region is empty");
}

// Calls fn(local_x, local_y, local_z, global_x, global_y, global_z) over the
// region bounding box.
template <class Fn>
void for_region(const Region& r, Fn&& fn) {
  const Dims3& rd = r.mask.dims();
  for (int64_t z = 0; z < rd.z; ++z)
    for (int64_t y = 0; y < rd.y; ++y)
      for (int64_t x = 0; x < rd.x; ++x) fn(x, y, z, x + r.corner.x, y + r.corner.y, z + r.corner.z);
}

Volume3D truth_from_weights(const Volume3D& x, const Region& r, const Grid3<float>& w) {
  Volume3D truth(x.dims(), x.spacing(), 0.0f);
  for_region(r, [&](int64_t lx, int64_t ly, int64_t lz, int64_t gx, int64_t gy, int64_t gz) {
    if (w.at(lx, ly, lz) > kTruthThreshold) truth.at(gx, gy, gz) = 1.0f;
  });
  return truth;
}

ValidationCase finish(const Volume3D& x, Volume3D image, Volume3D truth, AnomalyFamily family, Rng& rng) {
  ValidationCase c;
  c.degenerate = image.bitwise_equal(x);
  c.image = std::move(image);
  c.truth = std::move(truth);
  c.family = family;
  c.seed = rng.seed();
  return c;
}

Grid3<float> region_weights(const Region& r, bool smooth, Rng& rng) {
  if (!smooth) return r.mask;
  static constexpr int kSizes[] = {3, 5, 7};
  return smooth_mask(r.mask, kSizes[rng.uniform_int(0, 2)]);
}

}  // namespace

ValidationCase make_additive_noise(const Volume3D& x, const Region& region, double magnitude,
                                   bool smooth, Rng& rng) {
  check_region(x, region);
  if (!(magnitude > 0.0 && magnitude <= 0.5)) {
    throw ValidationError("additive noise magnitude must lie in (0, 0.5], got " + std::to_string(magnitude));
  }
  const double m = rng.bernoulli(0.5) ? magnitude : -magnitude;
  const Grid3<float> w = region_weights(region, smooth, rng);
  Volume3D image = x;
  for_region(region, [&](int64_t lx, int64_t ly, int64_t lz, int64_t gx, int64_t gy, int64_t gz) {
    const float wv = w.at(lx, ly, lz);
    if (wv == 0.0f) return;
    const double v = x.at(gx, gy, gz) + m * wv;
    image.at(gx, gy, gz) = static_cast<float>(std::clamp(v, 0.0, 1.0));
  });
  return finish(x, std::move(image), truth_from_weights(x, region, w),
                smooth ? AnomalyFamily::kAddNoiseSmooth : AnomalyFamily::kAddNoise, rng);
}

ValidationCase make_uniform_noise(const Volume3D& x, const Region& region, Rng& rng, bool smooth) {
  check_region(x, region);
  const Grid3<float> w = region_weights(region, smooth, rng);
  Volume3D image = x;
  for_region(region, [&](int64_t lx, int64_t ly, int64_t lz, int64_t gx, int64_t gy, int64_t gz) {
    const double wv = w.at(lx, ly, lz);
    const double u = rng.uniform();
    if (wv == 0.0) return;
    image.at(gx, gy, gz) = static_cast<float>((1.0 - wv) * x.at(gx, gy, gz) + wv * u);
  });
  return finish(x, std::move(image), truth_from_weights(x, region, w),
                smooth ? AnomalyFamily::kUniformNoiseSmooth : AnomalyFamily::kUniformNoise, rng);
}

ValidationCase make_deformation(const Volume3D& x, const Region& region, double strength, Rng& rng) {
  check_region(x, region);
  if (!(strength >= 0.0 && strength <= 1.0)) {
    throw ValidationError("deformation strength must lie in [0, 1], got " + std::to_string(strength));
  }
  const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
  const Dims3& rd = region.mask.dims();
  const double c[3] = {static_cast<double>(region.corner.x) + static_cast<double>(rd.x - 1) / 2.0,
                       static_cast<double>(region.corner.y) + static_cast<double>(rd.y - 1) / 2.0,
                       static_cast<double>(region.corner.z) + static_cast<double>(rd.z - 1) / 2.0};
  const double radius = static_cast<double>(rd.min()) / 2.0;
  Volume3D image = x;
  for_region(region, [&](int64_t lx, int64_t ly, int64_t lz, int64_t gx, int64_t gy, int64_t gz) {
    if (region.mask.at(lx, ly, lz) <= 0.0f) return;
    const double d[3] = {static_cast<double>(gx) - c[0], static_cast<double>(gy) - c[1],
                         static_cast<double>(gz) - c[2]};
    const double rho = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / radius;
    if (rho >= 1.0) return;
    const double falloff = (1.0 - rho * rho) * (1.0 - rho * rho);
    const double k = 1.0 - sign * strength * falloff;
    image.at(gx, gy, gz) = sample_trilinear(x.grid(), c[0] + d[0] * k, c[1] + d[1] * k, c[2] + d[2] * k);
  });
  Volume3D truth = truth_from_weights(x, region, region.mask);
  return finish(x, std::move(image), std::move(truth), AnomalyFamily::kDeform, rng);
}

ValidationCase make_reflection_axis(const Volume3D& x, const Region& region, int axis) {
  check_region(x, region);
  if (axis < 0 || axis > 2) throw ValidationError("reflection axis must be 0, 1 or 2");
  const Dims3& rd = region.mask.dims();
  Volume3D image = x;
  for_region(region, [&](int64_t lx, int64_t ly, int64_t lz, int64_t gx, int64_t gy, int64_t gz) {
    if (region.mask.at(lx, ly, lz) <= 0.0f) return;
    int64_t s[3] = {gx, gy, gz};
    const int64_t local[3] = {lx, ly, lz};
    const int64_t corner[3] = {region.corner.x, region.corner.y, region.corner.z};
    s[axis] = corner[axis] + (rd[axis] - 1 - local[axis]);
    image.at(gx, gy, gz) = x.at(s[0], s[1], s[2]);
  });
  Volume3D truth = truth_from_weights(x, region, region.mask);
  Rng unused(0);
  return finish(x, std::move(image), std::move(truth), AnomalyFamily::kReflect, unused);
}

ValidationCase make_reflection(const Volume3D& x, const Region& region, Rng& rng) {
  ValidationCase c = make_reflection_axis(x, region, static_cast<int>(rng.uniform_int(0, 2)));
  c.seed = rng.seed();
  return c;
}

ValidationCase make_shift(const Volume3D& x, const Region& region, Index3 offset, Rng& rng) {
  check_region(x, region);
  if (offset.x == 0 && offset.y == 0 && offset.z == 0) {
    throw ValidationError("shift offset must be non-zero on at least one axis");
  }
  const Dims3& d = x.dims();
  Volume3D image = x;
  for_region(region, [&](int64_t lx, int64_t ly, int64_t lz, int64_t gx, int64_t gy, int64_t gz) {
    if (region.mask.at(lx, ly, lz) <= 0.0f) return;
    const int64_t sx = std::clamp<int64_t>(gx - offset.x, 0, d.x - 1);
    const int64_t sy = std::clamp<int64_t>(gy - offset.y, 0, d.y - 1);
    const int64_t sz = std::clamp<int64_t>(gz - offset.z, 0, d.z - 1);
    image.at(gx, gy, gz) = x.at(sx, sy, sz);
  });
  Volume3D truth = truth_from_weights(x, region, region.mask);
  return finish(x, std::move(image), std::move(truth), AnomalyFamily::kShift, rng);
}

ValidationSetSpec ValidationSetSpec::table_default() {
  ValidationSetSpec s;
  for (AnomalyFamily f : kAllFamilies) s.counts[f] = f == AnomalyFamily::kHealthy ? 50 : 30;
  return s;
}

int64_t ValidationSetSpec::total() const {
  int64_t n = 0;
  for (const auto& [f, c] : counts) n += c;
  return n;
}

void ValidationSetSpec::validate() const {
  for (const auto& [f, c] : counts) {
    if (c < 0) throw ValidationError("validation count for " + std::string(to_string(f)) + " is negative");
  }
  if (region_min < 1 || region_max < region_min) {
    throw ValidationError("region size range must satisfy 1 <= min <= max");
  }
}

AnomalyFamily family_of_case(const ValidationSetSpec& spec, int64_t index) {
  int64_t acc = 0;
  for (AnomalyFamily f : kAllFamilies) {
    const auto it = spec.counts.find(f);
    if (it == spec.counts.end()) continue;
    acc += it->second;
    if (index < acc) return f;
  }
  throw ValidationError("case index " + std::to_string(index) + " beyond set size");
}

namespace {

// Cuboid with a 3-voxel margin on each side, so that a 7-tap blur stays
// inside the region and the mask is symmetric under reflection.
constexpr int64_t kRegionMargin = 3;

Region draw_region(const Volume3D& x, const ValidationSetSpec& spec, Rng& rng) {
  const Dims3& d = x.dims();
  int64_t size[3];
  for (int a = 0; a < 3; ++a) {
    const int64_t cap = d[a] - 1;
    if (cap < 2 * kRegionMargin + 1) {
      throw ValidationError("volume dims " + to_string(d) + " too small for validation regions");
    }
    const int64_t lo = std::clamp<int64_t>(spec.region_min, 2 * kRegionMargin + 1, cap);
    const int64_t hi = std::clamp<int64_t>(spec.region_max, lo, cap);
    size[a] = rng.uniform_int(lo, hi);
  }
  const Dims3 rd{size[0], size[1], size[2]};
  Region r;
  r.mask = gen_cuboid(rd,
                      {static_cast<double>(rd.x - 2 * kRegionMargin), static_cast<double>(rd.y - 2 * kRegionMargin),
                       static_cast<double>(rd.z - 2 * kRegionMargin)},
                      {});
  const ForegroundMask fg = foreground_mask(x);
  Rng place = rng.fork("placement");
  if (fg.count() > 0) {
    try {
      r.corner = sample_location(d, rd, &fg, place);
      return r;
    } catch (const GenerationError&) {
      // Sparse foreground: fall through to an unconstrained corner.
    }
  }
  r.corner = sample_location(d, rd, nullptr, place);
  return r;
}

Index3 draw_offset(const Dims3& rd, Rng& rng) {
  for (int attempt = 0; attempt < 16; ++attempt) {
    Index3 o{rng.uniform_int(-(rd.x / 4), rd.x / 4), rng.uniform_int(-(rd.y / 4), rd.y / 4),
             rng.uniform_int(-(rd.z / 4), rd.z / 4)};
    if (o.x != 0 || o.y != 0 || o.z != 0) return o;
  }
  return {1, 0, 0};
}

}  // namespace

ValidationCase make_validation_case(const std::vector<Volume3D>& volumes, const ValidationSetSpec& spec,
                                    int64_t index) {
  if (volumes.empty()) throw ValidationError("no held-out volumes supplied for the validation set");
  const AnomalyFamily family = family_of_case(spec, index);
  const Volume3D& x = volumes[static_cast<size_t>(index) % volumes.size()];
  Rng rng(derive_seed(spec.seed, static_cast<uint64_t>(index)));

  if (family == AnomalyFamily::kHealthy) {
    ValidationCase c;
    c.image = x;
    c.truth = Volume3D(x.dims(), x.spacing(), 0.0f);
    c.family = family;
    c.seed = rng.seed();
    return c;
  }

  const Region region = draw_region(x, spec, rng);
  switch (family) {
    case AnomalyFamily::kAddNoise:
    case AnomalyFamily::kAddNoiseSmooth:
      return make_additive_noise(x, region, rng.uniform(0.1, 0.5), is_smoothed_family(family), rng);
    case AnomalyFamily::kUniformNoise:
    case AnomalyFamily::kUniformNoiseSmooth:
      return make_uniform_noise(x, region, rng, is_smoothed_family(family));
    case AnomalyFamily::kDeform:
      return make_deformation(x, region, rng.uniform(0.3, 1.0), rng);
    case AnomalyFamily::kReflect:
      return make_reflection(x, region, rng);
    case AnomalyFamily::kShift:
      return make_shift(x, region, draw_offset(region.mask.dims(), rng), rng);
    case AnomalyFamily::kHealthy:
      break;
  }
  throw ValidationError("unhandled anomaly family");
}

ValidationManifest build_validation_set(const std::vector<Volume3D>& volumes,
                                        const std::vector<std::string>& source_names,
                                        const ValidationSetSpec& spec, const fs::path& out_dir, int workers) {
  spec.validate();
  const int64_t total = spec.total();
  if (total > 0 && volumes.empty()) {
    throw ValidationError("validation set needs at least one held-out volume");
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  ValidationManifest manifest(static_cast<size_t>(total));
  parallel_for(total, workers, [&](int64_t i) {
    const ValidationCase c = make_validation_case(volumes, spec, i);
    char id[32];
    std::snprintf(id, sizeof id, "case_%04lld", static_cast<long long>(i));
    ValidationEntry& e = manifest[static_cast<size_t>(i)];
    e.id = id;
    e.image_path = e.id + "_image.rvol";
    e.truth_path = e.id + "_truth.rvol";
    e.family = c.family;
    e.degenerate = c.degenerate;
    e.seed = c.seed;
    const size_t src = static_cast<size_t>(i) % volumes.size();
    e.source = src < source_names.size() ? source_names[src] : std::to_string(src);
    write_volume(c.image, out_dir / e.image_path);
    write_volume(c.truth, out_dir / e.truth_path);
  });
  write_validation_manifest(manifest, out_dir / "validation_manifest.json");
  return manifest;
}

void write_validation_manifest(const ValidationManifest& m, const fs::path& path) {
  json doc = json::array();
  for (const auto& e : m) {
    doc.push_back({{"id", e.id},
                   {"image_path", e.image_path},
                   {"truth_path", e.truth_path},
                   {"family", to_string(e.family)},
                   {"degenerate", e.degenerate},
                   {"seed", e.seed},
                   {"source", e.source}});
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(1) << '\n';
}

ValidationManifest read_validation_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open validation manifest " + path.string());
  ValidationManifest m;
  try {
    const json doc = json::parse(in);
    if (!doc.is_array()) throw LoadError("validation manifest must be a JSON array");
    for (const auto& j : doc) {
      ValidationEntry e;
      e.image_path = j.at("image_path").get<std::string>();
      e.truth_path = j.at("truth_path").get<std::string>();
      e.id = j.contains("id") ? j.at("id").get<std::string>() : fs::path(e.image_path).stem().string();
      const auto fam = parse_family(j.at("family").get<std::string>());
      if (!fam) throw LoadError("unknown family '" + j.at("family").get<std::string>() + "'");
      e.family = *fam;
      e.degenerate = j.value("degenerate", false);
      e.seed = j.value("seed", uint64_t{0});
      e.source = j.value("source", std::string{});
      m.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("validation manifest " + path.string() + ": " + e.what());
  }
  return m;
}

}  // namespace voxanom
