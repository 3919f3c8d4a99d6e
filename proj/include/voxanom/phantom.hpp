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

// Procedural stand-ins for normal scans: a soft ellipsoidal body with a few
// smooth inner structures and low-amplitude blurred texture, in [0, 1] with
// zero background.

#pragma once

#include <cstdint>

#include "voxanom/volume.hpp"

namespace voxanom {

struct PhantomParams {
  Dims3 dims = Dims3::cube(64);
  int inner_structures = 4;
  double texture_amplitude = 0.03;
};

Volume3D make_phantom(const PhantomParams& params, uint64_t seed);

}  // namespace voxanom
