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

// Anomaly geometry: rotated cuboids, spheres and random-walk brush shapes,
// affine augmentation and Gaussian edge smoothing.
//
// Canvas coordinates are continuous: voxel i covers [i, i+1) and its center
// sits at i + 0.5, so the canvas center is (W/2, H/2, D/2).

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "voxanom/common.hpp"
#include "voxanom/rng.hpp"

namespace voxanom {

// Per-voxel weight field in [0, 1]; binary until smoothed.
class ShapeMask : public Grid3<float> {
 public:
  using Grid3<float>::Grid3;
  ShapeMask() = default;
  explicit ShapeMask(Grid3<float> g) : Grid3<float>(std::move(g)) {}

  [[nodiscard]] int64_t nonzero_count() const;
  [[nodiscard]] bool is_binary() const;
  [[nodiscard]] bool empty_shape() const { return nonzero_count() == 0; }
};

// Rotation angles in radians, applied x first, then y, then z.
struct EulerAngles {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct BrushParams {
  int64_t steps = 20;
  double initial_radius = 4.0;
  // Standard deviation shared by position and radius increments.
  double step_sigma = 2.0;
  Dims3 canvas = Dims3::cube(64);

  // Throws ValidationError naming the offending field.
  void validate() const;
};

struct AffineParams {
  EulerAngles rotation;
  std::array<double, 3> scale{1.0, 1.0, 1.0};
  std::array<double, 3> translation{0.0, 0.0, 0.0};
};

struct AffineRanges {
  double scale_min = 0.7;
  double scale_max = 1.3;
  // Translation drawn from U[-f*dim, f*dim] per axis.
  double translation_fraction = 0.125;
  int max_attempts = 10;
};

ShapeMask gen_cuboid(Dims3 canvas, std::array<double, 3> extent, EulerAngles rotation);
ShapeMask gen_sphere(Dims3 canvas, double radius);
ShapeMask gen_brush_walk(const BrushParams& params, Rng& rng);

// Random instances for the "complex shapes" mixture.
ShapeMask random_cuboid(Dims3 canvas, Rng& rng);
ShapeMask random_sphere(Dims3 canvas, Rng& rng);

AffineParams random_affine(Dims3 canvas, const AffineRanges& ranges, Rng& rng);

// Nearest-neighbor warp about the canvas center; may return an empty mask.
ShapeMask apply_affine(const ShapeMask& mask, const AffineParams& affine);

// apply_affine, but an empty result is retried with fresh rotation and scale
// (translation kept) up to ranges.max_attempts total attempts.
ShapeMask augment_shape(const ShapeMask& mask, const AffineParams& affine, Rng& rng,
                        const AffineRanges& ranges = {});

// Normalized Gaussian taps with sigma = size / 6. `size` must be odd.
std::vector<float> gaussian_taps(int size);

// Zero-padded separable Gaussian blur.
Grid3<float> gaussian_blur(const Grid3<float>& in, int kernel_size);

// Blurred mask clamped to [0, 1].
ShapeMask smooth_mask(const ShapeMask& mask, int kernel_size);

struct ShapeLibrary {
  std::vector<ShapeMask> shapes;
  std::vector<BrushParams> params_used;
  uint64_t seed = 0;
};

// S in {10, 20, 40}, sigma in {1, 2, 4}, r in {2, 4, 8} scaled by min(canvas)/64.
std::vector<BrushParams> default_brush_grid(Dims3 canvas);

// Shape i uses grid[i % grid.size()] and its own stream derived from (seed, i).
ShapeLibrary build_shape_library(int64_t count, std::span<const BrushParams> grid, uint64_t seed,
                                 int workers = 1);

void save_shape_library(const ShapeLibrary& lib, const std::filesystem::path& dir);
ShapeLibrary load_shape_library(const std::filesystem::path& dir);

}  // namespace voxanom
