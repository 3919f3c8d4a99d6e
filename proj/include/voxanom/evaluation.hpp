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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "voxanom/validation.hpp"

namespace voxanom {

// Step-wise average precision, sum over thresholds of (R_n - R_{n-1}) * P_n,
// with tied scores grouped at one threshold. nullopt when there are no
// positive labels.
std::optional<double> average_precision(std::span<const float> scores, std::span<const uint8_t> labels);
std::optional<double> average_precision(std::span<const double> scores, std::span<const uint8_t> labels);

// Mergeable (score, positives, negatives) runs. Adding and merging in a fixed
// order gives a fixed result; the final value does not depend on the order
// either, since runs are re-sorted before the sweep.
class ApAccumulator {
 public:
  struct Run {
    double score;
    int64_t pos;
    int64_t neg;
  };

  void add(double score, bool positive);
  void add(std::span<const float> scores, std::span<const uint8_t> labels);
  void merge(const ApAccumulator& other);

  [[nodiscard]] std::optional<double> value() const;
  [[nodiscard]] int64_t positives() const { return pos_; }
  [[nodiscard]] int64_t total() const { return pos_ + neg_; }
  [[nodiscard]] double positive_rate() const;

  // Sorts descending and folds equal scores together.
  void compact();
  [[nodiscard]] const std::vector<Run>& runs() const { return runs_; }

 private:
  std::vector<Run> runs_;
  size_t compacted_ = 0;
  int64_t pos_ = 0;
  int64_t neg_ = 0;
};

enum class EvalTask { kPixel, kSample };
enum class EvalSubset { kBaseline, kFull };

std::string_view to_string(EvalTask t);
std::string_view to_string(EvalSubset s);
EvalTask parse_task(std::string_view s);
EvalSubset parse_subset(std::string_view s);

struct EvalOptions {
  EvalSubset subset = EvalSubset::kFull;
  // Empty: every family allowed by the subset.
  std::vector<AnomalyFamily> families;
  // Per-voxel keep probability for the pixel task; 1 disables subsampling.
  double subsample = 1.0;
  uint64_t subsample_seed = 0;
  int workers = 1;

  void validate() const;
};

struct CaseScore {
  std::string id;
  AnomalyFamily family = AnomalyFamily::kHealthy;
  double score = 0.0;
};

struct EvalReport {
  EvalTask task = EvalTask::kPixel;
  EvalSubset subset = EvalSubset::kFull;
  std::optional<double> ap_overall;
  // nullopt where a family has no positives to rank (healthy in the pixel task).
  std::map<AnomalyFamily, std::optional<double>> ap_by_family;
  std::map<AnomalyFamily, int64_t> cases_by_family;
  int64_t n_cases = 0;
  int64_t n_items = 0;  // voxels (pixel task) or cases (sample task) ranked
  double positive_rate = 0.0;
  std::vector<CaseScore> sample_scores;
  double subsample = 1.0;
  uint64_t subsample_seed = 0;
};

// Entries of `manifest` kept by the subset and family filter, in manifest order.
ValidationManifest filter_manifest(const ValidationManifest& manifest, const EvalOptions& opt);

// Pooled-voxel AP over all kept cases plus per-family pooled APs. Score maps
// are read from scores_dir/<id>.rvol; truth paths resolve against manifest_dir.
EvalReport evaluate_pixelwise(const ValidationManifest& manifest, const std::filesystem::path& manifest_dir,
                              const std::filesystem::path& scores_dir, const EvalOptions& opt);

// AP of per-case top-100 scores with label (family != healthy). Per-family
// values rank that family's cases against the healthy cases.
EvalReport evaluate_samplewise(const ValidationManifest& manifest, const std::filesystem::path& manifest_dir,
                               const std::filesystem::path& scores_dir, const EvalOptions& opt);

void write_eval_report(const EvalReport& r, const std::filesystem::path& path, const std::string& config_echo_json);

}  // namespace voxanom
