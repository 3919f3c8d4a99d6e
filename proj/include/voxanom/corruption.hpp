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

// Synthetic anomaly generation: a foreign texture patch is blended into a
// normal image under a (possibly edge-smoothed) shape mask,
//
//   x' = x * (1 - a_s) + x_fp * a_s,   a_s = alpha * mask,
//
// and the per-voxel a_s is kept as the regression target.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "voxanom/common.hpp"
#include "voxanom/patch_bank.hpp"
#include "voxanom/rng.hpp"
#include "voxanom/shapes.hpp"
#include "voxanom/volume.hpp"

namespace voxanom {

enum class ShapeFamily { kCuboid, kSphere, kBrush };

// Which families a generator may draw. kComplex picks uniformly among all three.
enum class ShapeMode { kCuboid, kSphere, kBrush, kComplex };

// kMixed flips a fair coin per sample between hard and smoothed edges.
enum class EdgeMode { kHard, kSmoothed, kMixed };

std::string_view to_string(ShapeFamily f);
std::string_view to_string(ShapeMode m);
std::string_view to_string(EdgeMode m);
std::optional<ShapeFamily> parse_shape_family(std::string_view s);
std::optional<ShapeMode> parse_shape_mode(std::string_view s);
std::optional<EdgeMode> parse_edge_mode(std::string_view s);

struct AnomalyRecord {
  ShapeFamily shape_family = ShapeFamily::kCuboid;
  double alpha = 0.0;
  Index3 corner{};
  Dims3 patch_dims{};
  // 0 for hard edges.
  int kernel_size = 0;
  uint64_t seed = 0;
  bool foreground_restricted = false;
};

// Per-voxel effective interpolation factor, image-sized.
class AlphaMap : public Grid3<float> {
 public:
  using Grid3<float>::Grid3;
  AlphaMap() = default;
};

struct CorruptedSample {
  Volume3D image;
  AlphaMap label;
  AnomalyRecord record;
};

struct GenerationConfig {
  ShapeMode shapes = ShapeMode::kComplex;
  EdgeMode edges = EdgeMode::kMixed;
  double alpha_min = 0.3;
  double alpha_max = 1.0;
  std::vector<int> kernel_sizes{3, 5, 7};
  bool foreground_only = false;
  double foreground_threshold = 0.5;
  int location_retries = 25;
  PatchAugmentConfig patch_augment;
  AffineRanges affine;

  void validate() const;
};

// Uniform corner with the patch fully inside the image. With a foreground
// mask, corners are redrawn until the covered foreground fraction reaches
// `threshold`; GenerationError after `retries` failed draws.
Index3 sample_location(Dims3 image_dims, Dims3 patch_dims, const ForegroundMask* fg, Rng& rng,
                       double threshold = 0.5, int retries = 25);

// Blends `patch` into `x` at `corner`. Voxels with a_s == 0 keep their
// original bits; blended voxels are clamped to [0, 1].
CorruptedSample interpolate(const Volume3D& x, const Grid3<float>& patch, const ShapeMask& mask,
                            double alpha, Index3 corner);

// Full pipeline: draw patch -> augment texture -> draw shape -> affine ->
// optional smoothing -> alpha -> location -> blend.
CorruptedSample generate_sample(const Volume3D& x, const PatchBank& bank, const ShapeLibrary& library,
                                const GenerationConfig& cfg, Rng& rng);

struct DatasetOptions {
  Dims3 patch_dims = Dims3::cube(64);
  int64_t bank_capacity = 32;
  int64_t count_per_volume = 1;
  uint64_t seed = 0;
  int workers = 1;
};

struct DatasetEntry {
  std::string image_path;  // relative to the output directory
  std::string label_path;
  std::string source;
  AnomalyRecord record;
};

struct DatasetManifest {
  std::vector<DatasetEntry> entries;
  std::vector<std::string> errors;
};

// Writes image/label pairs plus manifest.json (and errors.json when any
// source or write failed). Output is independent of `workers`.
DatasetManifest emit_dataset(const std::vector<std::filesystem::path>& sources,
                             const GenerationConfig& cfg, const ShapeLibrary& library,
                             const DatasetOptions& opts, const std::filesystem::path& out_dir);

}  // namespace voxanom
