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

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "voxanom/common.hpp"

namespace voxanom {

// Millimeters per voxel along x, y, z.
using Spacing = std::array<double, 3>;

inline constexpr Spacing kUnitSpacing{1.0, 1.0, 1.0};

// Dense float32 volume with physical spacing. Images, labels and score maps
// all travel as Volume3D when they touch the disk.
class Volume3D {
 public:
  Volume3D() = default;
  explicit Volume3D(Dims3 dims, Spacing spacing = kUnitSpacing, float fill = 0.0f);
  Volume3D(Dims3 dims, Spacing spacing, std::vector<float> data);
  explicit Volume3D(Grid3<float> grid, Spacing spacing = kUnitSpacing);

  [[nodiscard]] const Dims3& dims() const { return grid_.dims(); }
  [[nodiscard]] const Spacing& spacing() const { return spacing_; }
  [[nodiscard]] size_t size() const { return grid_.size(); }

  [[nodiscard]] const Grid3<float>& grid() const { return grid_; }
  Grid3<float>& grid() { return grid_; }

  float& at(int64_t x, int64_t y, int64_t z) { return grid_.at(x, y, z); }
  [[nodiscard]] float at(int64_t x, int64_t y, int64_t z) const { return grid_.at(x, y, z); }

  std::span<float> values() { return grid_.values(); }
  [[nodiscard]] std::span<const float> values() const { return grid_.values(); }

  // Index of the first non-finite voxel, or -1.
  [[nodiscard]] int64_t first_non_finite() const;

  // Byte-level equality, including the spacing.
  [[nodiscard]] bool bitwise_equal(const Volume3D& other) const;

 private:
  Grid3<float> grid_;
  Spacing spacing_ = kUnitSpacing;
};

// {voxel : intensity > 0}.
class ForegroundMask : public Grid3<uint8_t> {
 public:
  using Grid3<uint8_t>::Grid3;
  [[nodiscard]] int64_t count() const;
};

// `path` names the .rvol payload; the sidecar is the same stem with .json.
std::filesystem::path sidecar_path(const std::filesystem::path& rvol_path);

Volume3D read_volume(const std::filesystem::path& path);
void write_volume(const Volume3D& v, const std::filesystem::path& path);

struct ResampleResult {
  Volume3D volume;
  std::vector<std::string> warnings;
};

// Trilinear resampling in physical coordinates with edge clamping. Output
// dims are round(dim * spacing / target), clamped to at least 1; an axis that
// rounded to zero is reported in `warnings`.
ResampleResult resample_isotropic(const Volume3D& v, double target_spacing);

ForegroundMask foreground_mask(const Volume3D& v);

// (v - min) / (max - min); a constant volume maps to all zeros.
Volume3D min_max_normalize(const Volume3D& v);

// Trilinear sample at continuous voxel-index coordinates, clamped to the
// grid. Shared by resampling and the warp-based generators.
float sample_trilinear(const Grid3<float>& g, double x, double y, double z);

}  // namespace voxanom
