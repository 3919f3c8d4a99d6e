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

#include <cmath>

#include "scalar_impl.hpp"
#include "voxanom/simd/kernels.hpp"

namespace voxanom::simd {
namespace scalar {

void blend(const float* x, const float* fp, const float* alpha, float* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = blend_one(x[i], fp[i], alpha[i]);
}

void conv_row(const float* in, float* out, size_t n, const float* taps, size_t ntaps) {
  conv_row_range(in, out, n, taps, ntaps, 0, n);
}

void axpy(float* acc, const float* in, float tap, size_t n) {
  for (size_t i = 0; i < n; ++i) acc[i] = acc[i] + tap * in[i];
}

void weighted_accumulate(double* num, double* den, const float* scores, const double* wrow,
                         double wscale, double floor, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    double w = wrow[i] * wscale;
    w = w < floor ? floor : w;
    num[i] = num[i] + w * static_cast<double>(scores[i]);
    den[i] = den[i] + w;
  }
}

void divide(const double* num, const double* den, float* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = static_cast<float>(num[i] / den[i]);
}

void minmax(const float* x, size_t n, float* lo, float* hi) {
  float l = *lo;
  float h = *hi;
  for (size_t i = 0; i < n; ++i) {
    l = x[i] < l ? x[i] : l;
    h = x[i] > h ? x[i] : h;
  }
  *lo = l;
  *hi = h;
}

void normalize(const float* in, float* out, size_t n, float lo, float range) {
  for (size_t i = 0; i < n; ++i) out[i] = (in[i] - lo) / range;
}

void magnitude3(const float* gx, const float* gy, const float* gz, float* out, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    out[i] = std::sqrt(gx[i] * gx[i] + gy[i] * gy[i] + gz[i] * gz[i]);
  }
}

void clamp01(float* x, size_t n) {
  for (size_t i = 0; i < n; ++i) x[i] = clamp01_one(x[i]);
}

}  // namespace scalar

const KernelTable& scalar_kernels() {
  static const KernelTable table{
      Isa::kScalar,       "scalar",         scalar::blend,     scalar::conv_row,
      scalar::axpy,       scalar::weighted_accumulate,         scalar::divide,
      scalar::minmax,     scalar::normalize, scalar::magnitude3, scalar::clamp01,
  };
  return table;
}

}  // namespace voxanom::simd
