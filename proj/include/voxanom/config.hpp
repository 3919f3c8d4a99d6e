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

// Run configuration shared by all subcommands. Serialized as one JSON file;
// every section is optional and falls back to the defaults below.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "voxanom/corruption.hpp"
#include "voxanom/evaluation.hpp"
#include "voxanom/scoring.hpp"
#include "voxanom/shapes.hpp"
#include "voxanom/validation.hpp"

namespace voxanom {

struct ShapesSection {
  int64_t count = 300;
  Dims3 canvas = Dims3::cube(64);
  // Brush grid axes; empty means the default grid for `canvas`.
  std::vector<int64_t> steps;
  std::vector<double> initial_radius;
  std::vector<double> step_sigma;
  std::string out = "shapes";

  [[nodiscard]] std::vector<BrushParams> grid() const;
};

struct SynthesizeSection {
  std::vector<std::string> sources;
  std::string shape_library = "shapes";
  Dims3 patch_dims = Dims3::cube(64);
  int64_t bank_capacity = 32;
  int64_t count_per_volume = 1;
  GenerationConfig generation;
  std::string out = "dataset";
};

struct ValidationSection {
  std::vector<std::string> sources;
  std::map<AnomalyFamily, int64_t> counts = ValidationSetSpec::table_default().counts;
  int64_t region_min = 16;
  int64_t region_max = 64;
  std::string out = "validation";
};

struct ScoreSection {
  std::string manifest = "validation/validation_manifest.json";
  // Directory of per-case window subdirectories (<windows>/<id>/); empty
  // means run the baseline gradient scorer.
  std::string windows;
  std::string out = "scores";
};

struct EvaluateSection {
  std::string manifest = "validation/validation_manifest.json";
  std::string scores = "scores";
  EvalTask task = EvalTask::kPixel;
  EvalSubset subset = EvalSubset::kFull;
  std::vector<AnomalyFamily> families;
  double subsample = 1.0;
  std::string out = "eval_report.json";
};

struct PhantomSection {
  int64_t count = 4;
  Dims3 dims = Dims3::cube(64);
  std::string out = "phantoms";
};

struct RunConfig {
  uint64_t seed = 0;
  // 0 selects the number of available cores.
  int workers = 0;
  ShapesSection shapes;
  SynthesizeSection synthesize;
  ValidationSection validation;
  FusionConfig fusion;
  ScoreSection score;
  EvaluateSection evaluate;
  PhantomSection phantoms;

  [[nodiscard]] int resolved_workers() const;
  // Throws ValidationError naming the offending field path.
  void validate() const;
};

// Unknown keys and wrongly typed values raise ValidationError with the field path.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);
// `workers` is left out: it is an execution setting and must not change any
// artifact, this one included.
std::string config_to_json(const RunConfig& cfg, int indent = 2);

}  // namespace voxanom
