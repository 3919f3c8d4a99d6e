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

#include "voxanom/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "voxanom/parallel.hpp"
#include "voxanom/rng.hpp"
#include "voxanom/scoring.hpp"

namespace voxanom {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

template <class T>
std::optional<double> ap_impl(std::span<const T> scores, std::span<const uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw ValidationError("average_precision: " + std::to_string(scores.size()) + " scores but " +
                          std::to_string(labels.size()) + " labels");
  }
  ApAccumulator acc;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(static_cast<double>(scores[i]))) throw ValidationError("average_precision: NaN score");
    acc.add(static_cast<double>(scores[i]), labels[i] != 0);
  }
  return acc.value();
}

}  // namespace

std::optional<double> average_precision(std::span<const float> scores, std::span<const uint8_t> labels) {
  return ap_impl(scores, labels);
}

std::optional<double> average_precision(std::span<const double> scores, std::span<const uint8_t> labels) {
  return ap_impl(scores, labels);
}

void ApAccumulator::add(double score, bool positive) {
  runs_.push_back({score, positive ? 1 : 0, positive ? 0 : 1});
  (positive ? pos_ : neg_) += 1;
  if (runs_.size() > 2 * compacted_ + 4096) compact();
}

void ApAccumulator::add(std::span<const float> scores, std::span<const uint8_t> labels) {
  if (scores.size() != labels.size()) throw ValidationError("ApAccumulator: scores and labels differ in length");
  for (size_t i = 0; i < scores.size(); ++i) add(scores[i], labels[i] != 0);
}

void ApAccumulator::merge(const ApAccumulator& other) {
  runs_.insert(runs_.end(), other.runs_.begin(), other.runs_.end());
  pos_ += other.pos_;
  neg_ += other.neg_;
  if (runs_.size() > 2 * compacted_ + 4096) compact();
}

void ApAccumulator::compact() {
  std::sort(runs_.begin(), runs_.end(), [](const Run& a, const Run& b) { return a.score > b.score; });
  size_t w = 0;
  for (size_t r = 0; r < runs_.size(); ++r) {
    if (w > 0 && runs_[w - 1].score == runs_[r].score) {
      runs_[w - 1].pos += runs_[r].pos;
      runs_[w - 1].neg += runs_[r].neg;
    } else {
      runs_[w++] = runs_[r];
    }
  }
  runs_.resize(w);
  compacted_ = w;
}

double ApAccumulator::positive_rate() const {
  const int64_t n = total();
  return n == 0 ? 0.0 : static_cast<double>(pos_) / static_cast<double>(n);
}

std::optional<double> ApAccumulator::value() const {
  if (pos_ == 0) return std::nullopt;
  ApAccumulator sorted = *this;
  sorted.compact();
  const double p = static_cast<double>(pos_);
  int64_t tp = 0;
  int64_t fp = 0;
  double prev_recall = 0.0;
  double ap = 0.0;
  for (const Run& r : sorted.runs_) {
    tp += r.pos;
    fp += r.neg;
    if (r.pos == 0) continue;
    const double recall = static_cast<double>(tp) / p;
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

std::string_view to_string(EvalTask t) { return t == EvalTask::kPixel ? "pixel" : "sample"; }
std::string_view to_string(EvalSubset s) { return s == EvalSubset::kBaseline ? "baseline" : "full"; }

EvalTask parse_task(std::string_view s) {
  if (s == "pixel") return EvalTask::kPixel;
  if (s == "sample") return EvalTask::kSample;
  throw ValidationError("unknown task '" + std::string(s) + "' (expected pixel or sample)");
}

EvalSubset parse_subset(std::string_view s) {
  if (s == "baseline") return EvalSubset::kBaseline;
  if (s == "full") return EvalSubset::kFull;
  throw ValidationError("unknown subset '" + std::string(s) + "' (expected baseline or full)");
}

void EvalOptions::validate() const {
  if (!(subsample > 0.0 && subsample <= 1.0)) {
    throw ValidationError("subsample must lie in (0, 1], got " + std::to_string(subsample));
  }
  if (workers < 1) throw ValidationError("workers must be at least 1");
}

ValidationManifest filter_manifest(const ValidationManifest& manifest, const EvalOptions& opt) {
  ValidationManifest out;
  for (const auto& e : manifest) {
    if (opt.subset == EvalSubset::kBaseline && is_smoothed_family(e.family)) continue;
    if (!opt.families.empty() &&
        std::find(opt.families.begin(), opt.families.end(), e.family) == opt.families.end()) {
      continue;
    }
    out.push_back(e);
  }
  return out;
}

namespace {

struct LoadedCase {
  Volume3D score;
  Volume3D truth;
};

LoadedCase load_case(const ValidationEntry& e, const fs::path& manifest_dir, const fs::path& scores_dir) {
  const fs::path score_path = scores_dir / (e.id + ".rvol");
  if (!fs::exists(score_path)) throw IoError("missing score map for case " + e.id + ": " + score_path.string());
  LoadedCase c{read_volume(score_path), read_volume(manifest_dir / e.truth_path)};
  if (!(c.score.dims() == c.truth.dims())) {
    throw ValidationError("case " + e.id + ": score dims " + to_string(c.score.dims()) +
                          " do not match truth dims " + to_string(c.truth.dims()));
  }
  for (float v : c.score.values()) {
    if (!(v >= 0.0f && v <= 1.0f)) throw ValidationError("case " + e.id + ": score outside [0, 1]");
  }
  return c;
}

EvalReport base_report(EvalTask task, const ValidationManifest& kept, const EvalOptions& opt) {
  EvalReport r;
  r.task = task;
  r.subset = opt.subset;
  r.n_cases = static_cast<int64_t>(kept.size());
  r.subsample = opt.subsample;
  r.subsample_seed = opt.subsample_seed;
  for (const auto& e : kept) r.cases_by_family[e.family] += 1;
  return r;
}

}  // namespace

EvalReport evaluate_pixelwise(const ValidationManifest& manifest, const fs::path& manifest_dir,
                              const fs::path& scores_dir, const EvalOptions& opt) {
  opt.validate();
  const ValidationManifest kept = filter_manifest(manifest, opt);
  EvalReport report = base_report(EvalTask::kPixel, kept, opt);
  report.sample_scores.resize(kept.size());

  ApAccumulator overall;
  std::map<AnomalyFamily, ApAccumulator> per_family;
  // Batches bound peak memory; merging in manifest order keeps the result fixed.
  const int64_t batch = std::max(1, opt.workers) * 2;
  for (int64_t b0 = 0; b0 < static_cast<int64_t>(kept.size()); b0 += batch) {
    const int64_t b1 = std::min<int64_t>(b0 + batch, static_cast<int64_t>(kept.size()));
    std::vector<ApAccumulator> accs(static_cast<size_t>(b1 - b0));
    parallel_for(b1 - b0, opt.workers, [&](int64_t k) {
      const size_t i = static_cast<size_t>(b0 + k);
      const ValidationEntry& e = kept[i];
      const LoadedCase c = load_case(e, manifest_dir, scores_dir);
      report.sample_scores[i] = {e.id, e.family, sample_score(c.score.grid())};
      const auto s = c.score.values();
      const auto t = c.truth.values();
      std::vector<float> ks;
      std::vector<uint8_t> kl;
      ks.reserve(s.size());
      kl.reserve(s.size());
      Rng rng(derive_seed(opt.subsample_seed, hash_tag(e.id)));
      for (size_t v = 0; v < s.size(); ++v) {
        if (opt.subsample < 1.0 && !rng.bernoulli(opt.subsample)) continue;
        ks.push_back(s[v]);
        kl.push_back(t[v] >= kTruthThreshold ? 1 : 0);
      }
      ApAccumulator& a = accs[static_cast<size_t>(k)];
      a.add(ks, kl);
      a.compact();
    });
    for (int64_t k = 0; k < b1 - b0; ++k) {
      const auto& a = accs[static_cast<size_t>(k)];
      overall.merge(a);
      per_family[kept[static_cast<size_t>(b0 + k)].family].merge(a);
    }
  }

  report.ap_overall = overall.value();
  if (!report.ap_overall) throw ValidationError("no positive voxels among the selected cases; AP is undefined");
  report.n_items = overall.total();
  report.positive_rate = overall.positive_rate();
  for (const auto& [f, a] : per_family) report.ap_by_family[f] = a.value();
  return report;
}

EvalReport evaluate_samplewise(const ValidationManifest& manifest, const fs::path& manifest_dir,
                               const fs::path& scores_dir, const EvalOptions& opt) {
  opt.validate();
  const ValidationManifest kept = filter_manifest(manifest, opt);
  EvalReport report = base_report(EvalTask::kSample, kept, opt);
  report.sample_scores.resize(kept.size());
  parallel_for(static_cast<int64_t>(kept.size()), opt.workers, [&](int64_t k) {
    const size_t i = static_cast<size_t>(k);
    const LoadedCase c = load_case(kept[i], manifest_dir, scores_dir);
    report.sample_scores[i] = {kept[i].id, kept[i].family, sample_score(c.score.grid())};
  });

  ApAccumulator overall;
  ApAccumulator healthy;
  std::map<AnomalyFamily, ApAccumulator> anomalous;
  for (const auto& cs : report.sample_scores) {
    const bool positive = cs.family != AnomalyFamily::kHealthy;
    overall.add(cs.score, positive);
    if (positive) {
      anomalous[cs.family].add(cs.score, true);
    } else {
      healthy.add(cs.score, false);
    }
  }
  report.ap_overall = overall.value();
  if (!report.ap_overall) throw ValidationError("no anomalous cases among the selected cases; AP is undefined");
  report.n_items = overall.total();
  report.positive_rate = overall.positive_rate();
  if (report.cases_by_family.contains(AnomalyFamily::kHealthy)) {
    report.ap_by_family[AnomalyFamily::kHealthy] = std::nullopt;
  }
  for (auto& [f, a] : anomalous) {
    a.merge(healthy);
    report.ap_by_family[f] = a.value();
  }
  return report;
}

void write_eval_report(const EvalReport& r, const fs::path& path, const std::string& config_echo_json) {
  auto opt_json = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j;
  j["task"] = to_string(r.task);
  j["subset"] = to_string(r.subset);
  j["ap_overall"] = opt_json(r.ap_overall);
  json by_family = json::object();
  for (const auto& [f, v] : r.ap_by_family) by_family[std::string(to_string(f))] = opt_json(v);
  j["ap_by_family"] = by_family;
  json counts = json::object();
  for (const auto& [f, n] : r.cases_by_family) counts[std::string(to_string(f))] = n;
  j["cases_by_family"] = counts;
  j["n_cases"] = r.n_cases;
  j["n_items"] = r.n_items;
  j["positive_rate"] = r.positive_rate;
  json samples = json::array();
  for (const auto& s : r.sample_scores) {
    samples.push_back({{"id", s.id}, {"family", to_string(s.family)}, {"score", s.score}});
  }
  j["sample_scores"] = samples;
  j["subsample"] = {{"enabled", r.subsample < 1.0}, {"fraction", r.subsample}, {"seed", r.subsample_seed}};
  j["config_echo"] = config_echo_json.empty() ? json::object() : json::parse(config_echo_json);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace voxanom
