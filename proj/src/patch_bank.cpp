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

#include "voxanom/patch_bank.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "voxanom/simd/kernels.hpp"

namespace voxanom {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

PatchBank::PatchBank(int64_t capacity, Dims3 patch_dims)
    : capacity_(capacity), patch_dims_(patch_dims) {
  if (capacity < 1) throw ValidationError("bank capacity must be >= 1, got " + std::to_string(capacity));
  if (!patch_dims.positive()) throw ValidationError("bank patch dims must be positive");
}

int64_t PatchBank::insert(ForeignPatch p, Rng& rng) {
  if (!(p.dims() == patch_dims_)) {
    throw ValidationError("patch dims " + to_string(p.dims()) + " do not match bank dims " +
                          to_string(patch_dims_));
  }
  auto ptr = std::make_shared<const ForeignPatch>(std::move(p));
  if (size() < capacity_) {
    patches_.push_back(std::move(ptr));
    return size() - 1;
  }
  const int64_t slot = rng.uniform_int(0, capacity_ - 1);
  patches_[static_cast<size_t>(slot)] = std::move(ptr);
  return slot;
}

ForeignPatch sample_patch_from_volume(const Volume3D& v, Dims3 patch_dims, Rng& rng,
                                      std::string source_id) {
  if (!patch_dims.positive() || !strictly_smaller(patch_dims, v.dims())) {
    throw ValidationError("patch dims " + to_string(patch_dims) +
                          " must be positive and strictly smaller than volume dims " +
                          to_string(v.dims()));
  }
  const int64_t cx = rng.uniform_int(0, v.dims().x - patch_dims.x);
  const int64_t cy = rng.uniform_int(0, v.dims().y - patch_dims.y);
  const int64_t cz = rng.uniform_int(0, v.dims().z - patch_dims.z);
  ForeignPatch p{Grid3<float>(patch_dims, 0.0f), std::move(source_id)};
  for (int64_t z = 0; z < patch_dims.z; ++z) {
    for (int64_t y = 0; y < patch_dims.y; ++y) {
      const auto src = v.grid().row(y + cy, z + cz).subspan(static_cast<size_t>(cx),
                                                              static_cast<size_t>(patch_dims.x));
      std::copy(src.begin(), src.end(), p.data.row(y, z).begin());
    }
  }
  return p;
}

PatchAugmentation draw_patch_augmentation(const PatchAugmentConfig& cfg, Rng& rng) {
  PatchAugmentation a;
  a.noise_sigma = rng.uniform(0.0, cfg.max_noise_sigma);
  a.shift = rng.uniform(-cfg.max_shift, cfg.max_shift);
  for (int& q : a.quarter_turns) q = static_cast<int>(rng.uniform_int(0, 3));
  if (rng.bernoulli(cfg.small_rotation_probability)) {
    const double max_rad = cfg.max_small_rotation_deg * std::numbers::pi / 180.0;
    a.small_angle = rng.uniform(-max_rad, max_rad);
    a.small_axis = static_cast<int>(rng.uniform_int(0, 2));
  }
  a.noise_seed = rng.next_u64();
  return a;
}

namespace {

// One quarter turn about `axis`; requires the two other dims to match.
Grid3<float> quarter_turn(const Grid3<float>& g, int axis) {
  const Dims3& d = g.dims();
  Grid3<float> out(d, 0.0f);
  for (int64_t z = 0; z < d.z; ++z) {
    for (int64_t y = 0; y < d.y; ++y) {
      for (int64_t x = 0; x < d.x; ++x) {
        int64_t sx = x, sy = y, sz = z;
        switch (axis) {
          case 0:  // (y, z) -> (z, -y)
            sy = z;
            sz = d.y - 1 - y;
            break;
          case 1:
            sz = x;
            sx = d.z - 1 - z;
            break;
          default:
            sx = y;
            sy = d.x - 1 - x;
            break;
        }
        out.at(x, y, z) = g.at(sx, sy, sz);
      }
    }
  }
  return out;
}

Grid3<float> small_rotation(const Grid3<float>& g, int axis, double angle) {
  const Dims3& d = g.dims();
  const double c = std::cos(angle), s = std::sin(angle);
  const double ctr[3] = {static_cast<double>(d.x - 1) / 2.0, static_cast<double>(d.y - 1) / 2.0,
                         static_cast<double>(d.z - 1) / 2.0};
  const int a = (axis + 1) % 3;
  const int b = (axis + 2) % 3;
  Grid3<float> out(d, 0.0f);
  for (int64_t z = 0; z < d.z; ++z) {
    for (int64_t y = 0; y < d.y; ++y) {
      for (int64_t x = 0; x < d.x; ++x) {
        double p[3] = {static_cast<double>(x) - ctr[0], static_cast<double>(y) - ctr[1],
                       static_cast<double>(z) - ctr[2]};
        const double pa = c * p[a] + s * p[b];
        const double pb = -s * p[a] + c * p[b];
        p[a] = pa;
        p[b] = pb;
        out.at(x, y, z) = sample_trilinear(g, p[0] + ctr[0], p[1] + ctr[1], p[2] + ctr[2]);
      }
    }
  }
  return out;
}

}  // namespace

ForeignPatch apply_patch_augmentation(const ForeignPatch& p, const PatchAugmentation& aug) {
  ForeignPatch out = p;
  auto vals = out.data.values();
  if (aug.noise_sigma > 0.0) {
    Rng noise(aug.noise_seed);
    for (float& v : vals) v = static_cast<float>(v + noise.normal(0.0, aug.noise_sigma));
  }
  if (aug.shift != 0.0) {
    for (float& v : vals) v = static_cast<float>(v + aug.shift);
  }
  const Dims3& d = out.dims();
  for (int axis = 0; axis < 3; ++axis) {
    const bool square = axis == 0 ? d.y == d.z : (axis == 1 ? d.x == d.z : d.x == d.y);
    if (!square) continue;
    for (int t = 0; t < (aug.quarter_turns[static_cast<size_t>(axis)] & 3); ++t) {
      out.data = quarter_turn(out.data, axis);
    }
  }
  if (aug.small_angle != 0.0) out.data = small_rotation(out.data, aug.small_axis, aug.small_angle);
  simd::active().clamp01(out.data.values().data(), out.data.size());
  return out;
}

void save_patch_bank(const PatchBank& bank, uint64_t seed, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  json entries = json::array();
  for (int64_t i = 0; i < bank.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "patch_%04lld.rvol", static_cast<long long>(i));
    write_volume(Volume3D(bank.at(i).data), dir / name);
    entries.push_back({{"file", name}, {"source_id", bank.at(i).source_id}});
  }
  json doc;
  doc["capacity"] = bank.capacity();
  doc["seed"] = seed;
  doc["patch_dims"] = {bank.patch_dims().x, bank.patch_dims().y, bank.patch_dims().z};
  doc["patches"] = std::move(entries);
  std::ofstream out(dir / "bank.json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "bank.json").string());
  out << doc.dump(1) << '\n';
}

PatchBank load_patch_bank(const fs::path& dir) {
  std::ifstream in(dir / "bank.json");
  if (!in) throw IoError("missing " + (dir / "bank.json").string());
  try {
    const json doc = json::parse(in);
    const auto& pd = doc.at("patch_dims");
    PatchBank bank(doc.at("capacity").get<int64_t>(),
                   {pd.at(0).get<int64_t>(), pd.at(1).get<int64_t>(), pd.at(2).get<int64_t>()});
    // Loading never evicts: entries fit by construction of save_patch_bank.
    Rng unused(0);
    for (const auto& e : doc.at("patches")) {
      const Volume3D v = read_volume(dir / e.at("file").get<std::string>());
      bank.insert(ForeignPatch{v.grid(), e.at("source_id").get<std::string>()}, unused);
    }
    return bank;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("bank.json: " + std::string(e.what()));
  }
}

}  // namespace voxanom
