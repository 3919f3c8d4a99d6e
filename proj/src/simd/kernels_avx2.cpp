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

// AVX2 variants. This file is compiled with -mavx2 (no FMA) and must only be
// reached through the dispatch table after a CPU feature check.

#include "voxanom/simd/kernel_table.hpp"

#if defined(VOXANOM_HAVE_AVX2)

#include <immintrin.h>

#include "scalar_impl.hpp"

#ifndef __AVX2__
#error "kernels_avx2.cpp must be compiled with -mavx2"
#endif

namespace voxanom::simd {
namespace avx2 {
namespace {

inline __m256 clamp01_ps(__m256 v) {
  // Same operand order as scalar::clamp01_one.
  const __m256 one = _mm256_set1_ps(1.0f);
  const __m256 zero = _mm256_setzero_ps();
  v = _mm256_blendv_ps(one, v, _mm256_cmp_ps(v, one, _CMP_LT_OQ));
  return _mm256_blendv_ps(zero, v, _mm256_cmp_ps(v, zero, _CMP_GT_OQ));
}

void blend(const float* x, const float* fp, const float* alpha, float* out, size_t n) {
  const __m256 one = _mm256_set1_ps(1.0f);
  const __m256 zero = _mm256_setzero_ps();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 vx = _mm256_loadu_ps(x + i);
    const __m256 vf = _mm256_loadu_ps(fp + i);
    const __m256 va = _mm256_loadu_ps(alpha + i);
    const __m256 mixed =
        _mm256_add_ps(_mm256_mul_ps(vx, _mm256_sub_ps(one, va)), _mm256_mul_ps(vf, va));
    const __m256 is_zero = _mm256_cmp_ps(va, zero, _CMP_EQ_OQ);
    _mm256_storeu_ps(out + i, _mm256_blendv_ps(clamp01_ps(mixed), vx, is_zero));
  }
  for (; i < n; ++i) out[i] = scalar::blend_one(x[i], fp[i], alpha[i]);
}

void conv_row(const float* in, float* out, size_t n, const float* taps, size_t ntaps) {
  const size_t half = ntaps / 2;
  if (n < ntaps + 8) {
    scalar::conv_row_range(in, out, n, taps, ntaps, 0, n);
    return;
  }
  // Border outputs see the zero padding; the interior never does.
  scalar::conv_row_range(in, out, n, taps, ntaps, 0, half);
  size_t i = half;
  for (; i + 8 + half <= n; i += 8) {
    __m256 acc = _mm256_setzero_ps();
    const float* base = in + (i - half);
    for (size_t k = 0; k < ntaps; ++k) {
      acc = _mm256_add_ps(acc, _mm256_mul_ps(_mm256_set1_ps(taps[k]), _mm256_loadu_ps(base + k)));
    }
    _mm256_storeu_ps(out + i, acc);
  }
  scalar::conv_row_range(in, out, n, taps, ntaps, i, n);
}

void axpy(float* acc, const float* in, float tap, size_t n) {
  const __m256 vt = _mm256_set1_ps(tap);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 a = _mm256_loadu_ps(acc + i);
    _mm256_storeu_ps(acc + i, _mm256_add_ps(a, _mm256_mul_ps(vt, _mm256_loadu_ps(in + i))));
  }
  for (; i < n; ++i) acc[i] = acc[i] + tap * in[i];
}

void weighted_accumulate(double* num, double* den, const float* scores, const double* wrow,
                         double wscale, double floor, size_t n) {
  const __m256d vs = _mm256_set1_pd(wscale);
  const __m256d vf = _mm256_set1_pd(floor);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d w = _mm256_max_pd(_mm256_mul_pd(_mm256_loadu_pd(wrow + i), vs), vf);
    const __m256d s = _mm256_cvtps_pd(_mm_loadu_ps(scores + i));
    _mm256_storeu_pd(num + i, _mm256_add_pd(_mm256_loadu_pd(num + i), _mm256_mul_pd(w, s)));
    _mm256_storeu_pd(den + i, _mm256_add_pd(_mm256_loadu_pd(den + i), w));
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
  for (; i + 4 <= n; i += 4) {
    const __m256d q = _mm256_div_pd(_mm256_loadu_pd(num + i), _mm256_loadu_pd(den + i));
    _mm_storeu_ps(out + i, _mm256_cvtpd_ps(q));
  }
  for (; i < n; ++i) out[i] = static_cast<float>(num[i] / den[i]);
}

void minmax(const float* x, size_t n, float* lo, float* hi) {
  float l = *lo;
  float h = *hi;
  size_t i = 0;
  if (n >= 8) {
    __m256 vl = _mm256_set1_ps(l);
    __m256 vh = _mm256_set1_ps(h);
    for (; i + 8 <= n; i += 8) {
      const __m256 v = _mm256_loadu_ps(x + i);
      vl = _mm256_min_ps(v, vl);
      vh = _mm256_max_ps(v, vh);
    }
    alignas(32) float bl[8];
    alignas(32) float bh[8];
    _mm256_store_ps(bl, vl);
    _mm256_store_ps(bh, vh);
    for (int k = 0; k < 8; ++k) {
      l = bl[k] < l ? bl[k] : l;
      h = bh[k] > h ? bh[k] : h;
    }
  }
  for (; i < n; ++i) {
    l = x[i] < l ? x[i] : l;
    h = x[i] > h ? x[i] : h;
  }
  *lo = l;
  *hi = h;
}

void normalize(const float* in, float* out, size_t n, float lo, float range) {
  const __m256 vl = _mm256_set1_ps(lo);
  const __m256 vr = _mm256_set1_ps(range);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(out + i, _mm256_div_ps(_mm256_sub_ps(_mm256_loadu_ps(in + i), vl), vr));
  }
  for (; i < n; ++i) out[i] = (in[i] - lo) / range;
}

void magnitude3(const float* gx, const float* gy, const float* gz, float* out, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 x = _mm256_loadu_ps(gx + i);
    const __m256 y = _mm256_loadu_ps(gy + i);
    const __m256 z = _mm256_loadu_ps(gz + i);
    const __m256 s =
        _mm256_add_ps(_mm256_add_ps(_mm256_mul_ps(x, x), _mm256_mul_ps(y, y)), _mm256_mul_ps(z, z));
    _mm256_storeu_ps(out + i, _mm256_sqrt_ps(s));
  }
  for (; i < n; ++i) {
    out[i] = __builtin_sqrtf(gx[i] * gx[i] + gy[i] * gy[i] + gz[i] * gz[i]);
  }
}

void clamp01(float* x, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8) _mm256_storeu_ps(x + i, clamp01_ps(_mm256_loadu_ps(x + i)));
  for (; i < n; ++i) x[i] = scalar::clamp01_one(x[i]);
}

}  // namespace
}  // namespace avx2

const KernelTable* avx2_table() {
  static const KernelTable table{
      Isa::kAvx2,       "avx2",          avx2::blend,      avx2::conv_row,
      avx2::axpy,       avx2::weighted_accumulate,         avx2::divide,
      avx2::minmax,     avx2::normalize, avx2::magnitude3, avx2::clamp01,
  };
  return &table;
}

}  // namespace voxanom::simd

#else

namespace voxanom::simd {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace voxanom::simd

#endif
