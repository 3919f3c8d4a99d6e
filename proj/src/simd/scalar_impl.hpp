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

// Per-element scalar building blocks shared by the reference kernels and the
// tail/border loops of the vector variants. Kept free of standard library
// templates: this header is included from translation units compiled with
// wider ISA flags, and template instantiations emitted there could be
// selected by the linker for the whole program.

#pragma once

#include <cstddef>

namespace voxanom::simd::scalar {

static inline float clamp01_one(float v) {
  v = v < 1.0f ? v : 1.0f;
  return v > 0.0f ? v : 0.0f;
}

static inline float blend_one(float x, float fp, float a) {
  if (a == 0.0f) return x;
  return clamp01_one(x * (1.0f - a) + fp * a);
}

// Output elements [begin, end) of a zero-padded centered correlation.
static inline void conv_row_range(const float* in, float* out, size_t n, const float* taps,
                                  size_t ntaps, size_t begin, size_t end) {
  const long half = static_cast<long>(ntaps / 2);
  const long len = static_cast<long>(n);
  for (size_t i = begin; i < end; ++i) {
    float acc = 0.0f;
    for (size_t k = 0; k < ntaps; ++k) {
      const long j = static_cast<long>(i) + static_cast<long>(k) - half;
      const float v = (j >= 0 && j < len) ? in[j] : 0.0f;
      acc = acc + taps[k] * v;
    }
    out[i] = acc;
  }
}

}  // namespace voxanom::simd::scalar
