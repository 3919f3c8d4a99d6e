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

#include "voxanom/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "voxanom/parallel.hpp"

namespace voxanom {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ValidationError(path + ": " + what);
}

void read(const json& j, const std::string& path, bool& out) {
  if (!j.is_boolean()) fail(path, "expected a boolean");
  out = j.get<bool>();
}

void read(const json& j, const std::string& path, int64_t& out) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  out = j.get<int64_t>();
}

void read(const json& j, const std::string& path, int& out) {
  int64_t v = 0;
  read(j, path, v);
  if (v < INT32_MIN || v > INT32_MAX) fail(path, "integer out of range");
  out = static_cast<int>(v);
}

void read(const json& j, const std::string& path, uint64_t& out) {
  if (!j.is_number_unsigned()) fail(path, "expected a non-negative integer");
  out = j.get<uint64_t>();
}

void read(const json& j, const std::string& path, double& out) {
  if (!j.is_number()) fail(path, "expected a number");
  out = j.get<double>();
  if (!std::isfinite(out)) fail(path, "must be finite");
}

void read(const json& j, const std::string& path, std::string& out) {
  if (!j.is_string()) fail(path, "expected a string");
  out = j.get<std::string>();
}

void read(const json& j, const std::string& path, Dims3& out) {
  if (j.is_number_integer()) {
    out = Dims3::cube(j.get<int64_t>());
    return;
  }
  if (!j.is_array() || j.size() != 3) fail(path, "expected an integer or a list of 3 integers");
  read(j[0], path + "[0]", out.x);
  read(j[1], path + "[1]", out.y);
  read(j[2], path + "[2]", out.z);
}

void read(const json& j, const std::string& path, AnomalyFamily& out) {
  std::string s;
  read(j, path, s);
  const auto f = parse_family(s);
  if (!f) fail(path, "unknown anomaly family '" + s + "'");
  out = *f;
}

void read(const json& j, const std::string& path, ShapeMode& out) {
  std::string s;
  read(j, path, s);
  const auto m = parse_shape_mode(s);
  if (!m) fail(path, "unknown shape mode '" + s + "' (expected cuboid, sphere, brush or complex)");
  out = *m;
}

void read(const json& j, const std::string& path, EdgeMode& out) {
  std::string s;
  read(j, path, s);
  const auto m = parse_edge_mode(s);
  if (!m) fail(path, "unknown edge mode '" + s + "' (expected hard, smoothed or mixed)");
  out = *m;
}

void read(const json& j, const std::string& path, EvalTask& out) {
  std::string s;
  read(j, path, s);
  try {
    out = parse_task(s);
  } catch (const ValidationError& e) {
    fail(path, e.what());
  }
}

void read(const json& j, const std::string& path, EvalSubset& out) {
  std::string s;
  read(j, path, s);
  try {
    out = parse_subset(s);
  } catch (const ValidationError& e) {
    fail(path, e.what());
  }
}

template <class T>
void read(const json& j, const std::string& path, std::vector<T>& out) {
  if (!j.is_array()) fail(path, "expected a list");
  out.clear();
  for (size_t i = 0; i < j.size(); ++i) {
    T v{};
    read(j[i], path + "[" + std::to_string(i) + "]", v);
    out.push_back(std::move(v));
  }
}

void read(const json& j, const std::string& path, std::map<AnomalyFamily, int64_t>& out) {
  if (!j.is_object()) fail(path, "expected an object of family counts");
  out.clear();
  for (const auto& [k, v] : j.items()) {
    const auto f = parse_family(k);
    if (!f) fail(path + "." + k, "unknown anomaly family");
    read(v, path + "." + k, out[*f]);
  }
}

// Walks one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  template <class T>
  void field(const char* key, T& out) {
    seen_.insert(key);
    if (j_.contains(key)) read(j_.at(key), sub(key), out);
  }

  [[nodiscard]] std::optional<Section> child(const char* key) {
    seen_.insert(key);
    if (!j_.contains(key)) return std::nullopt;
    return Section(j_.at(key), sub(key));
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.contains(k)) fail(sub(k), "unknown key");
    }
  }

 private:
  [[nodiscard]] std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json dims_json(const Dims3& d) { return json::array({d.x, d.y, d.z}); }

}  // namespace

std::vector<BrushParams> ShapesSection::grid() const {
  if (steps.empty() && initial_radius.empty() && step_sigma.empty()) return default_brush_grid(canvas);
  const auto defaults = default_brush_grid(canvas);
  std::vector<int64_t> s = steps;
  std::vector<double> r = initial_radius;
  std::vector<double> g = step_sigma;
  // A partially given grid keeps the default values on the other axes.
  auto fill_default = [&](auto& axis, auto member) {
    if (!axis.empty()) return;
    for (const auto& p : defaults) {
      const auto v = p.*member;
      if (std::find(axis.begin(), axis.end(), v) == axis.end()) axis.push_back(v);
    }
  };
  fill_default(s, &BrushParams::steps);
  fill_default(r, &BrushParams::initial_radius);
  fill_default(g, &BrushParams::step_sigma);
  std::vector<BrushParams> out;
  for (int64_t si : s)
    for (double ri : r)
      for (double gi : g) out.push_back({si, ri, gi, canvas});
  return out;
}

int RunConfig::resolved_workers() const { return workers > 0 ? workers : default_workers(); }

void RunConfig::validate() const {
  if (workers < 0) fail("workers", "must be >= 0");

  if (shapes.count < 1) fail("shapes.count", "must be >= 1");
  if (!shapes.canvas.positive()) fail("shapes.canvas", "must be positive");
  for (size_t i = 0; i < shapes.steps.size(); ++i) {
    if (shapes.steps[i] < 1) fail("shapes.steps[" + std::to_string(i) + "]", "must be >= 1");
  }
  for (size_t i = 0; i < shapes.initial_radius.size(); ++i) {
    if (!(shapes.initial_radius[i] > 0.0)) fail("shapes.initial_radius[" + std::to_string(i) + "]", "must be > 0");
  }
  for (size_t i = 0; i < shapes.step_sigma.size(); ++i) {
    if (!(shapes.step_sigma[i] > 0.0)) fail("shapes.step_sigma[" + std::to_string(i) + "]", "must be > 0");
  }

  if (!synthesize.patch_dims.positive()) fail("synthesize.patch_dims", "must be positive");
  if (synthesize.bank_capacity < 1) fail("synthesize.bank_capacity", "must be >= 1");
  if (synthesize.count_per_volume < 0) fail("synthesize.count_per_volume", "must be >= 0");
  const auto& g = synthesize.generation;
  if (!(g.alpha_min >= 0.0 && g.alpha_min <= g.alpha_max && g.alpha_max <= 1.0)) {
    fail("synthesize.alpha_min", "alpha range must satisfy 0 <= alpha_min <= alpha_max <= 1");
  }
  if (g.kernel_sizes.empty()) fail("synthesize.kernel_sizes", "must not be empty");
  for (size_t i = 0; i < g.kernel_sizes.size(); ++i) {
    const int k = g.kernel_sizes[i];
    if (k < 1 || k % 2 == 0) fail("synthesize.kernel_sizes[" + std::to_string(i) + "]", "must be a positive odd integer");
  }
  if (!(g.foreground_threshold >= 0.0 && g.foreground_threshold <= 1.0)) {
    fail("synthesize.foreground_threshold", "must lie in [0, 1]");
  }
  if (g.location_retries < 1) fail("synthesize.location_retries", "must be >= 1");
  try {
    g.validate();
  } catch (const ValidationError& e) {
    fail("synthesize", e.what());
  }

  for (const auto& [f, n] : validation.counts) {
    if (n < 0) fail("validation.counts." + std::string(to_string(f)), "must be >= 0");
  }
  if (validation.region_min < 1) fail("validation.region_min", "must be >= 1");
  if (validation.region_max < validation.region_min) fail("validation.region_max", "must be >= region_min");

  if (!fusion.patch.positive()) fail("fusion.patch", "must be positive");
  if (!(fusion.overlap >= 0.0 && fusion.overlap < 1.0)) fail("fusion.overlap", "must lie in [0, 1)");
  if (!(fusion.sigma_fraction > 0.0)) fail("fusion.sigma_fraction", "must be > 0");

  if (!(evaluate.subsample > 0.0 && evaluate.subsample <= 1.0)) fail("evaluate.subsample", "must lie in (0, 1]");

  if (phantoms.count < 0) fail("phantoms.count", "must be >= 0");
  if (!phantoms.dims.positive()) fail("phantoms.dims", "must be positive");
}

RunConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  Section root(doc, "");
  root.field("seed", cfg.seed);
  root.field("workers", cfg.workers);

  if (auto s = root.child("shapes")) {
    s->field("count", cfg.shapes.count);
    s->field("canvas", cfg.shapes.canvas);
    s->field("steps", cfg.shapes.steps);
    s->field("initial_radius", cfg.shapes.initial_radius);
    s->field("step_sigma", cfg.shapes.step_sigma);
    s->field("out", cfg.shapes.out);
    s->finish();
  }
  if (auto s = root.child("synthesize")) {
    auto& g = cfg.synthesize.generation;
    s->field("sources", cfg.synthesize.sources);
    s->field("shape_library", cfg.synthesize.shape_library);
    s->field("patch_dims", cfg.synthesize.patch_dims);
    s->field("bank_capacity", cfg.synthesize.bank_capacity);
    s->field("count_per_volume", cfg.synthesize.count_per_volume);
    s->field("shapes", g.shapes);
    s->field("edges", g.edges);
    s->field("alpha_min", g.alpha_min);
    s->field("alpha_max", g.alpha_max);
    s->field("kernel_sizes", g.kernel_sizes);
    s->field("foreground_only", g.foreground_only);
    s->field("foreground_threshold", g.foreground_threshold);
    s->field("location_retries", g.location_retries);
    if (auto p = s->child("patch_augment")) {
      p->field("max_noise_sigma", g.patch_augment.max_noise_sigma);
      p->field("max_shift", g.patch_augment.max_shift);
      p->field("small_rotation_probability", g.patch_augment.small_rotation_probability);
      p->field("max_small_rotation_deg", g.patch_augment.max_small_rotation_deg);
      p->finish();
    }
    if (auto a = s->child("affine")) {
      a->field("scale_min", g.affine.scale_min);
      a->field("scale_max", g.affine.scale_max);
      a->field("translation_fraction", g.affine.translation_fraction);
      a->field("max_attempts", g.affine.max_attempts);
      a->finish();
    }
    s->field("out", cfg.synthesize.out);
    s->finish();
  }
  if (auto s = root.child("validation")) {
    s->field("sources", cfg.validation.sources);
    s->field("counts", cfg.validation.counts);
    s->field("region_min", cfg.validation.region_min);
    s->field("region_max", cfg.validation.region_max);
    s->field("out", cfg.validation.out);
    s->finish();
  }
  if (auto s = root.child("fusion")) {
    s->field("patch", cfg.fusion.patch);
    s->field("overlap", cfg.fusion.overlap);
    s->field("sigma_fraction", cfg.fusion.sigma_fraction);
    s->finish();
  }
  if (auto s = root.child("score")) {
    s->field("manifest", cfg.score.manifest);
    s->field("windows", cfg.score.windows);
    s->field("out", cfg.score.out);
    s->finish();
  }
  if (auto s = root.child("evaluate")) {
    s->field("manifest", cfg.evaluate.manifest);
    s->field("scores", cfg.evaluate.scores);
    s->field("task", cfg.evaluate.task);
    s->field("subset", cfg.evaluate.subset);
    s->field("families", cfg.evaluate.families);
    s->field("subsample", cfg.evaluate.subsample);
    s->field("out", cfg.evaluate.out);
    s->finish();
  }
  if (auto s = root.child("phantoms")) {
    s->field("count", cfg.phantoms.count);
    s->field("dims", cfg.phantoms.dims);
    s->field("out", cfg.phantoms.out);
    s->finish();
  }
  root.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const RunConfig& cfg, int indent) {
  const auto& g = cfg.synthesize.generation;
  json counts = json::object();
  for (const auto& [f, n] : cfg.validation.counts) counts[std::string(to_string(f))] = n;
  json families = json::array();
  for (auto f : cfg.evaluate.families) families.push_back(to_string(f));

  json j;
  j["seed"] = cfg.seed;
  j["shapes"] = {{"count", cfg.shapes.count},
                 {"canvas", dims_json(cfg.shapes.canvas)},
                 {"steps", cfg.shapes.steps},
                 {"initial_radius", cfg.shapes.initial_radius},
                 {"step_sigma", cfg.shapes.step_sigma},
                 {"out", cfg.shapes.out}};
  j["synthesize"] = {
      {"sources", cfg.synthesize.sources},
      {"shape_library", cfg.synthesize.shape_library},
      {"patch_dims", dims_json(cfg.synthesize.patch_dims)},
      {"bank_capacity", cfg.synthesize.bank_capacity},
      {"count_per_volume", cfg.synthesize.count_per_volume},
      {"shapes", to_string(g.shapes)},
      {"edges", to_string(g.edges)},
      {"alpha_min", g.alpha_min},
      {"alpha_max", g.alpha_max},
      {"kernel_sizes", g.kernel_sizes},
      {"foreground_only", g.foreground_only},
      {"foreground_threshold", g.foreground_threshold},
      {"location_retries", g.location_retries},
      {"patch_augment",
       {{"max_noise_sigma", g.patch_augment.max_noise_sigma},
        {"max_shift", g.patch_augment.max_shift},
        {"small_rotation_probability", g.patch_augment.small_rotation_probability},
        {"max_small_rotation_deg", g.patch_augment.max_small_rotation_deg}}},
      {"affine",
       {{"scale_min", g.affine.scale_min},
        {"scale_max", g.affine.scale_max},
        {"translation_fraction", g.affine.translation_fraction},
        {"max_attempts", g.affine.max_attempts}}},
      {"out", cfg.synthesize.out}};
  j["validation"] = {{"sources", cfg.validation.sources},
                     {"counts", counts},
                     {"region_min", cfg.validation.region_min},
                     {"region_max", cfg.validation.region_max},
                     {"out", cfg.validation.out}};
  j["fusion"] = {{"patch", dims_json(cfg.fusion.patch)},
                 {"overlap", cfg.fusion.overlap},
                 {"sigma_fraction", cfg.fusion.sigma_fraction}};
  j["score"] = {{"manifest", cfg.score.manifest}, {"windows", cfg.score.windows}, {"out", cfg.score.out}};
  j["evaluate"] = {{"manifest", cfg.evaluate.manifest},
                   {"scores", cfg.evaluate.scores},
                   {"task", to_string(cfg.evaluate.task)},
                   {"subset", to_string(cfg.evaluate.subset)},
                   {"families", families},
                   {"subsample", cfg.evaluate.subsample},
                   {"out", cfg.evaluate.out}};
  j["phantoms"] = {{"count", cfg.phantoms.count}, {"dims", dims_json(cfg.phantoms.dims)}, {"out", cfg.phantoms.out}};
  return j.dump(indent);
}

}  // namespace voxanom
