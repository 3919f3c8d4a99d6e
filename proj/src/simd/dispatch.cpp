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

#include <cstdlib>
#include <string>

#include "voxanom/simd/kernels.hpp"

namespace voxanom::simd {

const KernelTable* avx2_table();
const KernelTable* neon_table();

namespace {

bool cpu_has_avx2() {
#if (defined(__x86_64__) || defined(__i386__)) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable& select() {
  const char* env = std::getenv("VOXANOM_ISA");
  if (env != nullptr) {
    const std::string want(env);
    for (Isa isa : available_isas()) {
      if (isa_name(isa) == want) return *kernels_for(isa);
    }
  }
  const auto isas = available_isas();
  return *kernels_for(isas.back());
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
    case Isa::kNeon:
      return "neon";
  }
  return "unknown";
}

const KernelTable* kernels_for(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return &scalar_kernels();
    case Isa::kAvx2:
      return cpu_has_avx2() ? avx2_table() : nullptr;
    case Isa::kNeon:
      return neon_table();
  }
  return nullptr;
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out{Isa::kScalar};
  for (Isa isa : {Isa::kAvx2, Isa::kNeon}) {
    if (kernels_for(isa) != nullptr) out.push_back(isa);
  }
  return out;
}

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

}  // namespace voxanom::simd
