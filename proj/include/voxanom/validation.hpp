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

// Held-out validation anomalies with voxel-level ground truth.
//
// Every generator composites inside a region (a shape mask placed at a
// corner) and leaves the rest of the image bit-identical. Truth is binary:
// the mask itself for hard edges, or {smoothed weight > 0.5} otherwise.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "voxanom/common.hpp"
#include "voxanom/rng.hpp"
#include "voxanom/shapes.hpp"
#include "voxanom/volume.hpp"

namespace voxanom {

enum class AnomalyFamily {
  kHealthy,
  kAddNoise,
  kAddNoiseSmooth,
  kDeform,
  kReflect,
  kShift,
  kUniformNoise,
  kUniformNoiseSmooth,
};

inline constexpr std::array<AnomalyFamily, 8> kAllFamilies{
    AnomalyFamily::kHealthy,      AnomalyFamily::kAddNoise, AnomalyFamily::kAddNoiseSmooth,
    AnomalyFamily::kDeform,       AnomalyFamily::kReflect,  AnomalyFamily::kShift,
    AnomalyFamily::kUniformNoise, AnomalyFamily::kUniformNoiseSmooth,
};

std::string_view to_string(AnomalyFamily f);
std::optional<AnomalyFamily> parse_family(std::string_view s);
bool is_smoothed_family(AnomalyFamily f);

inline constexpr double kTruthThreshold = 0.5;

struct Region {
  ShapeMask mask;
  Index3 corner{};
};

struct ValidationCase {
  Volume3D image;
  Volume3D truth;
  AnomalyFamily family = AnomalyFamily::kHealthy;
  // Image came out identical to the source (symmetric content, clamp
  // saturation); kept so the set composition stays fixed.
  bool degenerate = false;
  uint64_t seed = 0;
};

// Sign of the offset is drawn from rng; with `smooth`, the region mask is
// blurred with a kernel drawn from {3, 5, 7}.
ValidationCase make_additive_noise(const Volume3D& x, const Region& region, double magnitude,
                                   bool smooth, Rng& rng);

ValidationCase make_uniform_noise(const Volume3D& x, const Region& region, Rng& rng, bool smooth);

// Radial warp about the region center; rng picks sink or source.
ValidationCase make_deformation(const Volume3D& x, const Region& region, double strength, Rng& rng);

// Mirror of the region's bounding box about a random axis, composited under the mask.
ValidationCase make_reflection(const Volume3D& x, const Region& region, Rng& rng);

// Same as make_reflection with the axis fixed.
ValidationCase make_reflection_axis(const Volume3D& x, const Region& region, int axis);

ValidationCase make_shift(const Volume3D& x, const Region& region, Index3 offset, Rng& rng);

struct ValidationSetSpec {
  std::map<AnomalyFamily, int64_t> counts;
  uint64_t seed = 0;
  // Region edge length drawn per axis from [min, max], capped at dim - 1.
  int64_t region_min = 16;
  int64_t region_max = 64;

  // 50 healthy + 30 of each anomalous family.
  static ValidationSetSpec table_default();
  [[nodiscard]] int64_t total() const;
  void validate() const;
};

// Family of case `index` (cases are laid out family by family in enum order).
AnomalyFamily family_of_case(const ValidationSetSpec& spec, int64_t index);

// Builds case `index` from volumes[index % volumes.size()] with the stream
// derived from (spec.seed, index).
ValidationCase make_validation_case(const std::vector<Volume3D>& volumes, const ValidationSetSpec& spec,
                                    int64_t index);

struct ValidationEntry {
  std::string id;
  std::string image_path;  // relative to the manifest directory
  std::string truth_path;
  AnomalyFamily family = AnomalyFamily::kHealthy;
  bool degenerate = false;
  uint64_t seed = 0;
  std::string source;
};

using ValidationManifest = std::vector<ValidationEntry>;

// Writes every case plus validation_manifest.json into out_dir.
ValidationManifest build_validation_set(const std::vector<Volume3D>& volumes,
                                        const std::vector<std::string>& source_names,
                                        const ValidationSetSpec& spec, const std::filesystem::path& out_dir,
                                        int workers = 1);

void write_validation_manifest(const ValidationManifest& m, const std::filesystem::path& path);
ValidationManifest read_validation_manifest(const std::filesystem::path& path);

}  // namespace voxanom
