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

// AArch64 NEON variants. NEON is mandatory on AArch64, so no runtime check is
// needed beyond the compile-time guard.

#include "voxanom/simd/kernel_table.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)

#include <arm_neon.h>

#include "scalar_impl.hpp"

namespace voxanom::simd {
namespace neon {
namespace {

inline float32x4_t clamp01_ps(float32x4_t v) {
  const float32x4_t one = vdupq_n_f32(1.0f);
  const float32x4_t zero = vdupq_n_f32(0.0f);
  v = vbslq_f32(vcltq_f32(v, one), v, one);
  return vbslq_f32(vcgtq_f32(v, zero), v, zero);
}

void blend(const float* x, const float* fp, const float* alpha, float* out, size_t n) {
  const float32x4_t one = vdupq_n_f32(1.0f);
  const float32x4_t zero = vdupq_n_f32(0.0f);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t vx = vld1q_f32(x + i);
    const float32x4_t vf = vld1q_f32(fp + i);
    const float32x4_t va = vld1q_f32(alpha + i);
    // vmulq/vaddq rather than vmlaq: vmlaq may fuse on AArch64.
    const float32x4_t mixed = vaddq_f32(vmulq_f32(vx, vsubq_f32(one, va)), vmulq_f32(vf, va));
    vst1q_f32(out + i, vbslq_f32(vceqq_f32(va, zero), vx, clamp01_ps(mixed)));
  }
  for (; i < n; ++i) out[i] = scalar::blend_one(x[i], fp[i], alpha[i]);
}

void conv_row(const float* in, float* out, size_t n, const float* taps, size_t ntaps) {
  const size_t half = ntaps / 2;
  if (n < ntaps + 4) {
    scalar::conv_row_range(in, out, n, taps, ntaps, 0, n);
    return;
  }
  scalar::conv_row_range(in, out, n, taps, ntaps, 0, half);
  size_t i = half;
  for (; i + 4 + half <= n; i += 4) {
    float32x4_t acc = vdupq_n_f32(0.0f);
    const float* base = in + (i - half);
    for (size_t k = 0; k < ntaps; ++k) {
      acc = vaddq_f32(acc, vmulq_f32(vdupq_n_f32(taps[k]), vld1q_f32(base + k)));
    }
    vst1q_f32(out + i, acc);
  }
  scalar::conv_row_range(in, out, n, taps, ntaps, i, n);
}

void axpy(float* acc, const float* in, float tap, size_t n) {
  const float32x4_t vt = vdupq_n_f32(tap);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    vst1q_f32(acc + i, vaddq_f32(vld1q_f32(acc + i), vmulq_f32(vt, vld1q_f32(in + i))));
  }
  for (; i < n; ++i) acc[i] = acc[i] + tap * in[i];
}

void weighted_accumulate(double* num, double* den, const float* scores, const double* wrow,
                         double wscale, double floor, size_t n) {
  const float64x2_t vs = vdupq_n_f64(wscale);
  const float64x2_t vf = vdupq_n_f64(floor);
  size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t w = vmaxq_f64(vmulq_f64(vld1q_f64(wrow + i), vs), vf);
    const float64x2_t s = vcvt_f64_f32(vld1_f32(scores + i));
    vst1q_f64(num + i, vaddq_f64(vld1q_f64(num + i), vmulq_f64(w, s)));
    vst1q_f64(den + i, vaddq_f64(vld1q_f64(den + i), w));
  }
  for (; i < n; ++i) {
    double w = wrow[i] * wscale;
    w = w < floor ? floor : w;
    num[i] = num[i] + w * static_cast<double>(scores[i]);
    den[i] = den[i] + w;
  }
}

void divide(const double* num, const double* den, float* out, size_t n) {
  size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1_f32(out + i, vcvt_f32_f64(vdivq_f64(vld1q_f64(num + i), vld1q_f64(den + i))));
  }
  for (; i < n; ++i) out[i] = static_cast<float>(num[i] / den[i]);
}

void minmax(const float* x, size_t n, float* lo, float* hi) {
  float l = *lo;
  float h = *hi;
  size_t i = 0;
  if (n >= 4) {
    float32x4_t vl = vdupq_n_f32(l);
    float32x4_t vh = vdupq_n_f32(h);
    for (; i + 4 <= n; i += 4) {
      const float32x4_t v = vld1q_f32(x + i);
      vl = vminq_f32(v, vl);
      vh = vmaxq_f32(v, vh);
    }
    const float rl = vminvq_f32(vl);
    const float rh = vmaxvq_f32(vh);
    l = rl < l ? rl : l;
    h = rh > h ? rh : h;
  }
  for (; i < n; ++i) {
    l = x[i] < l ? x[i] : l;
    h = x[i] > h ? x[i] : h;
  }
  *lo = l;
  *hi = h;
}

void normalize(const float* in, float* out, size_t n, float lo, float range) {
  const float32x4_t vl = vdupq_n_f32(lo);
  const float32x4_t vr = vdupq_n_f32(range);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(out + i, vdivq_f32(vsubq_f32(vld1q_f32(in + i), vl), vr));
  for (; i < n; ++i) out[i] = (in[i] - lo) / range;
}

void magnitude3(const float* gx, const float* gy, const float* gz, float* out, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t x = vld1q_f32(gx + i);
    const float32x4_t y = vld1q_f32(gy + i);
    const float32x4_t z = vld1q_f32(gz + i);
    const float32x4_t s = vaddq_f32(vaddq_f32(vmulq_f32(x, x), vmulq_f32(y, y)), vmulq_f32(z, z));
    vst1q_f32(out + i, vsqrtq_f32(s));
  }
  for (; i < n; ++i) {
    out[i] = __builtin_sqrtf(gx[i] * gx[i] + gy[i] * gy[i] + gz[i] * gz[i]);
  }
}

void clamp01(float* x, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(x + i, clamp01_ps(vld1q_f32(x + i)));
  for (; i < n; ++i) x[i] = scalar::clamp01_one(x[i]);
}

}  // namespace
}  // namespace neon

const KernelTable* neon_table() {
  static const KernelTable table{
      Isa::kNeon,       "neon",          neon::blend,      neon::conv_row,
      neon::axpy,       neon::weighted_accumulate,         neon::divide,
      neon::minmax,     neon::normalize, neon::magnitude3, neon::clamp01,
  };
  return &table;
}

}  // namespace voxanom::simd

#else

namespace voxanom::simd {
const KernelTable* neon_table() { return nullptr; }
}  // namespace voxanom::simd

#endif
