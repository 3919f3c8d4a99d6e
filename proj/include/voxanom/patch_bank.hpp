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
#include <memory>
#include <string>
#include <vector>

#include "voxanom/common.hpp"
#include "voxanom/rng.hpp"
#include "voxanom/volume.hpp"

namespace voxanom {

// Texture sub-volume cut from a training image.
struct ForeignPatch {
  Grid3<float> data;
  std::string source_id;

  [[nodiscard]] const Dims3& dims() const { return data.dims(); }
};

// Fixed-capacity pool of foreign patches with random-slot replacement.
// Patches are immutable once inserted and shared by pointer, so copying a
// bank is a cheap snapshot.
class PatchBank {
 public:
  PatchBank(int64_t capacity, Dims3 patch_dims);

  [[nodiscard]] int64_t capacity() const { return capacity_; }
  [[nodiscard]] const Dims3& patch_dims() const { return patch_dims_; }
  [[nodiscard]] int64_t size() const { return static_cast<int64_t>(patches_.size()); }
  [[nodiscard]] bool empty() const { return patches_.empty(); }
  [[nodiscard]] const ForeignPatch& at(int64_t i) const { return *patches_.at(static_cast<size_t>(i)); }
  [[nodiscard]] const std::vector<std::shared_ptr<const ForeignPatch>>& patches() const {
    return patches_;
  }

  // Appends while below capacity, otherwise overwrites a uniformly random
  // slot. Returns the slot written.
  int64_t insert(ForeignPatch p, Rng& rng);

 private:
  int64_t capacity_;
  Dims3 patch_dims_;
  std::vector<std::shared_ptr<const ForeignPatch>> patches_;
};

// Copies the sub-volume at a uniformly drawn corner. patch_dims must be
// strictly smaller than the volume on every axis.
ForeignPatch sample_patch_from_volume(const Volume3D& v, Dims3 patch_dims, Rng& rng,
                                      std::string source_id = {});

inline PatchBank bank_insert_replace(PatchBank bank, ForeignPatch p, Rng& rng) {
  bank.insert(std::move(p), rng);
  return bank;
}

struct PatchAugmentConfig {
  double max_noise_sigma = 0.05;
  double max_shift = 0.1;
  double small_rotation_probability = 0.5;
  double max_small_rotation_deg = 15.0;
};

// One concrete draw of the texture augmentation. Exposed so tests can pin
// individual components.
struct PatchAugmentation {
  double noise_sigma = 0.0;
  double shift = 0.0;
  // Quarter turns about x, y, z (0..3). Axes whose cross-section is not
  // square are left alone so the patch keeps its dims.
  std::array<int, 3> quarter_turns{0, 0, 0};
  // Small trilinear rotation (radians) about `small_axis`; 0 disables it.
  double small_angle = 0.0;
  int small_axis = 2;
  uint64_t noise_seed = 0;
};

PatchAugmentation draw_patch_augmentation(const PatchAugmentConfig& cfg, Rng& rng);

// Noise, then shift, then rotation, then clamp to [0, 1].
ForeignPatch apply_patch_augmentation(const ForeignPatch& p, const PatchAugmentation& aug);

inline ForeignPatch augment_patch(const ForeignPatch& p, Rng& rng,
                                  const PatchAugmentConfig& cfg = {}) {
  return apply_patch_augmentation(p, draw_patch_augmentation(cfg, rng));
}

// Checkpoint: directory of patch .rvol files plus bank.json.
void save_patch_bank(const PatchBank& bank, uint64_t seed, const std::filesystem::path& dir);
PatchBank load_patch_bank(const std::filesystem::path& dir);

}  // namespace voxanom
