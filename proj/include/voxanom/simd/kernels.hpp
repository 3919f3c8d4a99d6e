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

// Row kernels for the data-parallel inner loops.
//
// Every ISA variant evaluates each output element with the same sequence of
// IEEE operations as the scalar reference (no FMA contraction, identical
// summation order), so all variants are bitwise interchangeable. The build
// compiles with -ffp-contract=off to keep that true for the scalar code.

#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "voxanom/simd/kernel_table.hpp"

namespace voxanom::simd {

const KernelTable& scalar_kernels();

// nullptr when the variant was not compiled in or the CPU lacks support.
const KernelTable* kernels_for(Isa isa);

// Variants usable on this machine, scalar first.
std::vector<Isa> available_isas();

// Selected once per process: the VOXANOM_ISA environment variable
// ("scalar", "avx2", "neon") wins when that variant is available, otherwise
// the widest supported variant.
const KernelTable& active();

std::string_view isa_name(Isa isa);

}  // namespace voxanom::simd
