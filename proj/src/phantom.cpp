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

#include "voxanom/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <array>
#include <vector>

#include "voxanom/rng.hpp"
#include "voxanom/shapes.hpp"

namespace voxanom {

namespace {

struct Ellipsoid {
  std::array<double, 3> center;
  std::array<double, 3> radii;
  double value;
};

// Soft indicator: 1 inside, 0 outside, smoothstep over `edge` voxels.
double soft_inside(const Ellipsoid& e, double x, double y, double z, double edge) {
  const double dx = (x - e.center[0]) / e.radii[0];
  const double dy = (y - e.center[1]) / e.radii[1];
  const double dz = (z - e.center[2]) / e.radii[2];
  const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
  const double mean_radius = (e.radii[0] + e.radii[1] + e.radii[2]) / 3.0;
  const double t = std::clamp((1.0 - r) * mean_radius / edge + 0.5, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

}  // namespace

Volume3D make_phantom(const PhantomParams& params, uint64_t seed) {
  if (!params.dims.positive()) throw ValidationError("phantom dims must be positive");
  if (params.inner_structures < 0) throw ValidationError("inner_structures must be >= 0");
  if (!(params.texture_amplitude >= 0.0)) throw ValidationError("texture_amplitude must be >= 0");
  const Dims3 d = params.dims;
  Rng rng(seed);
  Rng layout = rng.fork("layout");
  Rng texture_rng = rng.fork("texture");

  std::array<double, 3> c{};
  std::array<double, 3> half{};
  for (int a = 0; a < 3; ++a) {
    c[a] = static_cast<double>(d[a]) / 2.0 + layout.uniform(-0.03, 0.03) * static_cast<double>(d[a]);
    half[a] = static_cast<double>(d[a]) * layout.uniform(0.36, 0.42);
  }
  const Ellipsoid body{c, half, layout.uniform(0.35, 0.45)};
  std::vector<Ellipsoid> inner;
  for (int k = 0; k < params.inner_structures; ++k) {
    Ellipsoid e{};
    for (int a = 0; a < 3; ++a) {
      e.radii[a] = half[a] * layout.uniform(0.15, 0.35);
      e.center[a] = c[a] + layout.uniform(-0.45, 0.45) * half[a];
    }
    e.value = layout.uniform(-0.15, 0.35);
    inner.push_back(e);
  }

  Grid3<float> noise(d, 0.0f);
  for (float& v : noise.values()) v = static_cast<float>(texture_rng.normal(0.0, 1.0));
  const Grid3<float> texture = gaussian_blur(noise, 5);

  Volume3D out(d);
  for (int64_t z = 0; z < d.z; ++z)
    for (int64_t y = 0; y < d.y; ++y)
      for (int64_t x = 0; x < d.x; ++x) {
        const double px = static_cast<double>(x) + 0.5;
        const double py = static_cast<double>(y) + 0.5;
        const double pz = static_cast<double>(z) + 0.5;
        const double in_body = soft_inside(body, px, py, pz, 3.0);
        if (in_body <= 0.0) continue;
        double v = body.value;
        for (const auto& e : inner) v += e.value * soft_inside(e, px, py, pz, 2.0);
        v += params.texture_amplitude * texture.at(x, y, z);
        out.at(x, y, z) = static_cast<float>(std::clamp(v * in_body, 0.0, 1.0));
      }
  return out;
}

}  // namespace voxanom
