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

// Function table shared by all ISA variants. Deliberately free of standard
// library types so that it can be included from translation units compiled
// with wider ISA flags.

#pragma once

#include <cstddef>

namespace voxanom::simd {

enum class Isa { kScalar, kAvx2, kNeon };

struct KernelTable {
  Isa isa;
  const char* name;

  // out[i] = alpha[i] == 0 ? x[i] : clamp(x[i]*(1-alpha[i]) + fp[i]*alpha[i], 0, 1)
  void (*blend)(const float* x, const float* fp, const float* alpha, float* out, size_t n);

  // Zero-padded centered correlation with an odd-length kernel:
  // out[i] = sum_k taps[k] * in[i + k - ntaps/2], k ascending.
  void (*conv_row)(const float* in, float* out, size_t n, const float* taps, size_t ntaps);

  // acc[i] += tap * in[i]
  void (*axpy)(float* acc, const float* in, float tap, size_t n);

  // w = max(wrow[i] * wscale, floor); num[i] += w * scores[i]; den[i] += w
  void (*weighted_accumulate)(double* num, double* den, const float* scores, const double* wrow,
                              double wscale, double floor, size_t n);

  // out[i] = float(num[i] / den[i])
  void (*divide)(const double* num, const double* den, float* out, size_t n);

  // Running min/max; *lo and *hi must be initialized by the caller.
  void (*minmax)(const float* x, size_t n, float* lo, float* hi);

  // out[i] = (in[i] - lo) / range
  void (*normalize)(const float* in, float* out, size_t n, float lo, float range);

  // out[i] = sqrt(gx^2 + gy^2 + gz^2)
  void (*magnitude3)(const float* gx, const float* gy, const float* gz, float* out, size_t n);

  // x[i] = clamp(x[i], 0, 1)
  void (*clamp01)(float* x, size_t n);
};

}  // namespace voxanom::simd
