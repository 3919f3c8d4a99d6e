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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "voxanom/common.hpp"
#include "voxanom/volume.hpp"

namespace voxanom {

// Per-voxel anomaly score in [0, 1].
class ScoreMap : public Grid3<float> {
 public:
  using Grid3<float>::Grid3;
  ScoreMap() = default;
  explicit ScoreMap(Grid3<float> g) : Grid3<float>(std::move(g)) {}
};

struct FusionConfig {
  Dims3 patch = Dims3::cube(160);
  double overlap = 0.5;
  // Gaussian sigma as a fraction of the window size, per axis.
  double sigma_fraction = 0.125;

  void validate() const;
};

inline constexpr double kFusionWeightFloor = 1e-8;

struct Window {
  Index3 start{};
  Dims3 size{};

  friend bool operator==(const Window&, const Window&) = default;
};

struct WindowScore {
  Window window;
  Grid3<float> scores;
};

// Window starts along one axis: stride floor(patch * (1 - overlap)) (at
// least 1), last start clamped flush to the end, duplicates removed. The
// patch shrinks to `dim` when larger.
std::vector<int64_t> plan_axis(int64_t dim, int64_t patch, double overlap);

// Cartesian product of the per-axis plans, x fastest.
std::vector<Window> plan_windows(Dims3 volume, const FusionConfig& cfg);

// Per-axis Gaussian bump, peak at the window center, sigma = fraction * size.
std::vector<double> gaussian_profile(int64_t size, double sigma_fraction);

// Gaussian-weighted average of overlapping window scores. Throws if any
// voxel is not covered by at least one window.
ScoreMap fuse_scores(Dims3 volume, std::span<const WindowScore> windows, const FusionConfig& cfg);

// Voxelwise mean; each voxel's values are summed in sorted order so the
// result does not depend on input order.
ScoreMap ensemble_mean(std::span<const ScoreMap> maps);

// Mean of the 100 largest scores (of all scores when fewer than 100 voxels).
double sample_score(const Grid3<float>& map);

inline constexpr int64_t kSampleTopK = 100;

// Min-max normalized central-difference gradient magnitude.
ScoreMap baseline_gradient_scorer(const Grid3<float>& x);
inline ScoreMap baseline_gradient_scorer(const Volume3D& x) { return baseline_gradient_scorer(x.grid()); }

using PatchScorer = std::function<Grid3<float>(const Grid3<float>&)>;

// Crops every planned window, scores the crops (in parallel), then fuses.
ScoreMap sliding_window_score(const Volume3D& x, const FusionConfig& cfg, const PatchScorer& scorer,
                              int workers = 1);

// Exchange format: <id>.window.json ({"start","size","volume_dims","patch"})
// next to the <id>.rvol patch scores.
void write_window_score(const std::filesystem::path& dir, const std::string& id, const WindowScore& ws,
                        Dims3 volume_dims);

struct WindowSet {
  Dims3 volume_dims{};
  std::vector<WindowScore> windows;  // ordered by file name
};

WindowSet read_window_dir(const std::filesystem::path& dir);

}  // namespace voxanom
