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

// Acceptance checks, one PASS/FAIL line each. Exit status is nonzero when
// any check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <map>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "test_support.hpp"
#include "voxanom/corruption.hpp"
#include "voxanom/evaluation.hpp"
#include "voxanom/parallel.hpp"
#include "voxanom/phantom.hpp"
#include "voxanom/scoring.hpp"
#include "voxanom/shapes.hpp"
#include "voxanom/validation.hpp"

using namespace voxanom;
using voxanom::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

bool same_bits(float a, float b) { return std::memcmp(&a, &b, sizeof a) == 0; }

ShapeMask random_mask(Dims3 canvas, Rng& rng) {
  switch (rng.uniform_int(0, 2)) {
    case 0:
      return random_cuboid(canvas, rng);
    case 1:
      return random_sphere(canvas, rng);
    default: {
      const auto grid = default_brush_grid(canvas);
      return gen_brush_walk(grid[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(grid.size()) - 1))], rng);
    }
  }
}

Outcome interpolation_identities() {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(101);
  int64_t checked = 0;
  for (int trial = 0; trial < 1000 && o.pass; ++trial) {
    const Volume3D x = testing::random_volume(Dims3::cube(16), derive_seed(101, static_cast<uint64_t>(trial)));
    const Dims3 pd{rng.uniform_int(2, 16), rng.uniform_int(2, 16), rng.uniform_int(2, 16)};
    Grid3<float> patch(pd);
    for (float& v : patch.values()) v = static_cast<float>(rng.uniform());
    const ShapeMask hard = random_mask(pd, rng);
    const Index3 c{rng.uniform_int(0, 16 - pd.x), rng.uniform_int(0, 16 - pd.y), rng.uniform_int(0, 16 - pd.z)};

    if (!interpolate(x, patch, hard, 0.0, c).image.bitwise_equal(x)) o.fail(fmt("alpha=0 changed case %.0f", trial));

    const auto full = interpolate(x, patch, hard, 1.0, c);
    const int ks[] = {3, 5, 7};
    const ShapeMask soft = smooth_mask(hard, ks[rng.uniform_int(0, 2)]);
    const double alpha = rng.uniform(0.0, 1.0);
    const auto mixed = interpolate(x, patch, soft, alpha, c);
    for (int64_t z = 0; z < 16; ++z)
      for (int64_t y = 0; y < 16; ++y)
        for (int64_t xx = 0; xx < 16; ++xx) {
          const bool inside = xx >= c.x && xx < c.x + pd.x && y >= c.y && y < c.y + pd.y && z >= c.z && z < c.z + pd.z;
          const float m = inside ? hard.at(xx - c.x, y - c.y, z - c.z) : 0.0f;
          const float p = inside ? patch.at(xx - c.x, y - c.y, z - c.z) : 0.0f;
          const float a = x.at(xx, y, z);
          const float got = full.image.at(xx, y, z);
          if (m == 1.0f ? got != p : !same_bits(got, a)) o.fail(fmt("alpha=1 replacement wrong in case %.0f", trial));
          const float mv = mixed.image.at(xx, y, z);
          const float lo = inside ? std::min(a, p) : a;
          const float hi = inside ? std::max(a, p) : a;
          if (mv < lo - 1e-6f || mv > hi + 1e-6f) o.fail(fmt("convex bound broken in case %.0f", trial));
          ++checked;
        }
  }
  const double t = seconds_since(t0);
  if (t >= 10.0) o.fail(fmt("took %.2f s", t));
  if (o.pass) o.detail = fmt("1000 cases, %.0f voxels, %.2f s", static_cast<double>(checked), t);
  return o;
}

Outcome edge_smoothing() {
  Outcome o;
  for (int k : {3, 5, 7}) {
    const auto taps = gaussian_taps(k);
    const double sum = std::accumulate(taps.begin(), taps.end(), 0.0);
    if (std::fabs(sum - 1.0) > 1e-6) o.fail(fmt("taps for size %.0f sum to %.9f", k, sum));
  }
  Rng rng(202);
  double worst_ratio = 0.0;
  for (int i = 0; i < 100; ++i) {
    const ShapeMask mask = random_mask(Dims3::cube(32), rng);
    if (mask.empty_shape()) {
      o.fail(fmt("shape %.0f is empty", i));
      continue;
    }
    const float alpha = static_cast<float>(rng.uniform(0.3, 1.0));
    Grid3<float> hard(mask.dims());
    for (size_t j = 0; j < hard.values().size(); ++j) hard.values()[j] = alpha * mask.values()[j];
    const float hard_step = oracle::max_neighbor_step(hard);
    for (int k : {3, 5, 7}) {
      const ShapeMask s = smooth_mask(mask, k);
      Grid3<float> soft(mask.dims());
      for (size_t j = 0; j < soft.values().size(); ++j) soft.values()[j] = alpha * s.values()[j];
      const float step = oracle::max_neighbor_step(soft);
      if (!(step < hard_step)) o.fail(fmt("shape %.0f kernel %.0f: step %.6f vs hard %.6f", i, k, step, hard_step));
      worst_ratio = std::max(worst_ratio, static_cast<double>(step / hard_step));
    }
  }
  if (o.pass) o.detail = fmt("100 shapes x 3 kernels, worst smoothed/hard step ratio %.3f", worst_ratio);
  return o;
}

Outcome brush_walks() {
  Outcome o;
  const Dims3 canvas = Dims3::cube(64);
  const auto grid = default_brush_grid(canvas);
  int walks = 0;
  for (size_t g = 0; g < grid.size(); ++g) {
    for (uint64_t s = 0; s < 8; ++s) {
      Rng rng(derive_seed(303, g * 8 + s));
      const ShapeMask m = gen_brush_walk(grid[g], rng);
      ++walks;
      if (m.empty_shape()) o.fail(fmt("grid point %.0f seed %.0f is empty", g, s));
      const int comps = oracle::components_26(m);
      if (comps != 1) o.fail(fmt("grid point %.0f seed %.0f has %.0f components", g, s, comps));
    }
  }
  for (double r : {1.0, 2.5, 4.0, 8.0, 13.0}) {
    Rng rng(7);
    const ShapeMask walk = gen_brush_walk({1, r, 2.0, canvas}, rng);
    const ShapeMask sphere = gen_sphere(canvas, r);
    if (walk.values().size() != sphere.values().size() ||
        !std::equal(walk.values().begin(), walk.values().end(), sphere.values().begin())) {
      o.fail(fmt("S=1 walk with radius %.1f differs from the sphere", r));
    }
  }
  if (o.pass) o.detail = fmt("%.0f walks over %.0f grid points connected and non-empty; S=1 matches sphere", walks,
                             static_cast<double>(grid.size()));
  return o;
}

Outcome ap_oracle() {
  Outcome o;
  Rng rng(404);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const int64_t n = rng.uniform_int(1, 1000);
    const bool ties = rng.bernoulli(0.5);
    const double rate = rng.uniform(0.02, 0.6);
    std::vector<double> s(static_cast<size_t>(n));
    std::vector<uint8_t> l(static_cast<size_t>(n));
    for (size_t i = 0; i < s.size(); ++i) {
      s[i] = ties ? static_cast<double>(rng.uniform_int(0, 9)) / 9.0 : rng.uniform();
      l[i] = rng.bernoulli(rate) ? 1 : 0;
    }
    const auto want = oracle::brute_force_ap(s, l);
    const auto got = average_precision(std::span<const double>(s), std::span<const uint8_t>(l));
    if (want.has_value() != got.has_value()) {
      o.fail(fmt("instance %.0f: defined-ness differs", trial));
      continue;
    }
    if (want) worst = std::max(worst, std::fabs(*want - *got));
  }
  if (worst > 1e-9) o.fail(fmt("max |AP - oracle| = %.3g", worst));

  // Informative scores, then labels shuffled away from them.
  const size_t n = 10000;
  std::vector<double> s(n);
  std::vector<uint8_t> l(n);
  for (size_t i = 0; i < n; ++i) {
    l[i] = rng.bernoulli(0.25) ? 1 : 0;
    s[i] = l[i] ? rng.uniform(0.5, 1.0) : rng.uniform(0.0, 0.6);
  }
  for (size_t i = n - 1; i > 0; --i) std::swap(l[i], l[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(i)))]);
  const double rate = static_cast<double>(std::count(l.begin(), l.end(), 1)) / static_cast<double>(n);
  const double perm = *average_precision(std::span<const double>(s), std::span<const uint8_t>(l));
  if (std::fabs(perm - rate) > 0.05) o.fail(fmt("permuted AP %.4f vs positive rate %.4f", perm, rate));
  if (o.pass) o.detail = fmt("max |AP - oracle| %.2g over 500 instances; permuted AP %.4f, rate %.4f", worst, perm, rate);
  return o;
}

Outcome fusion() {
  Outcome o;
  Rng rng(505);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Dims3 vol{rng.uniform_int(1, 48), rng.uniform_int(1, 48), rng.uniform_int(1, 48)};
    FusionConfig cfg;
    cfg.patch = {rng.uniform_int(1, 32), rng.uniform_int(1, 32), rng.uniform_int(1, 32)};
    cfg.overlap = rng.uniform(0.0, 0.9);
    const float c = static_cast<float>(rng.uniform());
    std::vector<WindowScore> ws;
    std::vector<std::pair<Dims3, Dims3>> boxes;
    for (const auto& w : plan_windows(vol, cfg)) {
      ws.push_back({w, Grid3<float>(w.size, c)});
      boxes.emplace_back(w.start, w.size);
    }
    const auto cov = oracle::coverage(vol, boxes);
    if (*std::min_element(cov.begin(), cov.end()) < 1) o.fail(fmt("layout %.0f leaves a voxel uncovered", trial));
    const auto fused = fuse_scores(vol, ws, cfg);
    for (float v : fused.values()) worst = std::max(worst, static_cast<double>(std::fabs(v - c)));
  }
  for (int trial = 0; trial < 500; ++trial) {
    const Dims3 vol{rng.uniform_int(1, 300), rng.uniform_int(1, 300), rng.uniform_int(1, 300)};
    FusionConfig cfg;
    cfg.patch = {rng.uniform_int(1, 200), rng.uniform_int(1, 200), rng.uniform_int(1, 200)};
    cfg.overlap = rng.uniform(0.0, 0.95);
    // Coverage is separable, so checking each axis plan is exhaustive.
    for (int axis = 0; axis < 3; ++axis) {
      const int64_t dim = vol[axis];
      const int64_t p = std::min(cfg.patch[axis], dim);
      std::vector<int> hit(static_cast<size_t>(dim), 0);
      for (int64_t s : plan_axis(dim, cfg.patch[axis], cfg.overlap))
        for (int64_t i = s; i < s + p; ++i) {
          if (i >= dim) o.fail("window runs past the volume");
          else ++hit[static_cast<size_t>(i)];
        }
      if (*std::min_element(hit.begin(), hit.end()) < 1) o.fail("axis plan leaves a gap");
    }
  }
  if (worst > 1e-6) o.fail(fmt("constant invariance error %.3g", worst));
  if (o.pass) o.detail = fmt("50 layouts, max deviation %.2g; 500 random plans fully covered", worst);
  return o;
}

Outcome validation_set() {
  Outcome o;
  TempDir dir("accept_val");
  std::vector<Volume3D> vols;
  std::vector<std::string> names;
  for (int i = 0; i < 4; ++i) {
    vols.push_back(make_phantom({Dims3::cube(32), 4, 0.03}, derive_seed(606, i)));
    names.push_back("phantom_" + std::to_string(i));
  }
  ValidationSetSpec spec = ValidationSetSpec::table_default();
  spec.seed = 606;
  spec.region_min = 8;
  spec.region_max = 20;
  const auto manifest = build_validation_set(vols, names, spec, dir.path(), default_workers());
  std::map<AnomalyFamily, int64_t> seen;
  for (const auto& e : manifest) ++seen[e.family];
  if (manifest.size() != 260) o.fail(fmt("%.0f cases", static_cast<double>(manifest.size())));
  if (seen[AnomalyFamily::kHealthy] != 50) o.fail("healthy count is not 50");
  for (auto f : kAllFamilies)
    if (f != AnomalyFamily::kHealthy && seen[f] != 30) o.fail(std::string(to_string(f)) + " count is not 30");

  const auto write = [&](const std::string& sub, bool invert) {
    fs::create_directories(dir / sub);
    for (const auto& e : manifest) {
      Volume3D t = read_volume(dir / e.truth_path);
      if (invert) for (float& v : t.values()) v = 1.0f - v;
      write_volume(t, dir / sub / (e.id + ".rvol"));
    }
    return dir / sub;
  };
  EvalOptions opt;
  opt.workers = default_workers();
  const auto oracle_dir = write("oracle", false);
  const auto inv_dir = write("inverted", true);
  const auto px = evaluate_pixelwise(manifest, dir.path(), oracle_dir, opt);
  const auto sm = evaluate_samplewise(manifest, dir.path(), oracle_dir, opt);
  const auto ipx = evaluate_pixelwise(manifest, dir.path(), inv_dir, opt);
  const auto ism = evaluate_samplewise(manifest, dir.path(), inv_dir, opt);
  if (*px.ap_overall != 1.0) o.fail(fmt("oracle pixel AP %.9f", *px.ap_overall));
  if (*sm.ap_overall != 1.0) o.fail(fmt("oracle sample AP %.9f", *sm.ap_overall));
  if (*ipx.ap_overall > ipx.positive_rate + 0.01)
    o.fail(fmt("inverted pixel AP %.4f vs rate %.4f", *ipx.ap_overall, ipx.positive_rate));
  if (*ism.ap_overall > ism.positive_rate + 0.01)
    o.fail(fmt("inverted sample AP %.4f vs rate %.4f", *ism.ap_overall, ism.positive_rate));
  if (o.pass)
    o.detail = fmt("260 cases (50 + 7x30); oracle AP 1/1; inverted pixel %.4f (rate %.4f), sample %.4f",
                   *ipx.ap_overall, ipx.positive_rate, *ism.ap_overall) +
               fmt(" (rate %.4f)", ism.positive_rate);
  return o;
}

Outcome directional_e2e() {
  Outcome o;
  const auto t0 = Clock::now();
  TempDir dir("accept_e2e");
  std::vector<Volume3D> vols;
  std::vector<std::string> names;
  for (int i = 0; i < 6; ++i) {
    vols.push_back(make_phantom({Dims3::cube(64), 4, 0.03}, derive_seed(707, i)));
    names.push_back("phantom_" + std::to_string(i));
  }
  ValidationSetSpec spec;
  for (auto f : kAllFamilies) spec.counts[f] = 0;
  spec.counts[AnomalyFamily::kHealthy] = 6;
  spec.counts[AnomalyFamily::kAddNoise] = 6;
  spec.counts[AnomalyFamily::kAddNoiseSmooth] = 6;
  spec.counts[AnomalyFamily::kUniformNoise] = 6;
  spec.counts[AnomalyFamily::kUniformNoiseSmooth] = 6;
  spec.seed = 707;
  const auto manifest = build_validation_set(vols, names, spec, dir.path(), default_workers());

  fs::create_directories(dir / "scores");
  parallel_for(static_cast<int64_t>(manifest.size()), default_workers(), [&](int64_t i) {
    const auto& e = manifest[static_cast<size_t>(i)];
    const Volume3D img = read_volume(dir / e.image_path);
    write_volume(Volume3D(baseline_gradient_scorer(img)), dir / "scores" / (e.id + ".rvol"));
  });

  EvalOptions hard;
  hard.workers = default_workers();
  hard.families = {AnomalyFamily::kAddNoise, AnomalyFamily::kUniformNoise};
  EvalOptions soft = hard;
  soft.families = {AnomalyFamily::kAddNoiseSmooth, AnomalyFamily::kUniformNoiseSmooth};
  const auto rh = evaluate_pixelwise(manifest, dir.path(), dir / "scores", hard);
  const auto rs = evaluate_pixelwise(manifest, dir.path(), dir / "scores", soft);
  const double t = seconds_since(t0);
  const double ah = *rh.ap_overall;
  const double as = *rs.ap_overall;
  if (!(ah > as)) o.fail(fmt("hard-edge AP %.4f is not above smoothed AP %.4f", ah, as));
  if (t >= 120.0) o.fail(fmt("took %.1f s", t));
  if (o.pass) o.detail = fmt("30 cases at 64^3: hard-edge pixel AP %.4f > smoothed %.4f, %.1f s", ah, as, t);
  return o;
}

// Runs the CLI in `cwd`; returns the exit status.
int run_cli(const fs::path& cwd, const std::string& args, const std::string& env = "") {
  const std::string cmd = "cd '" + cwd.string() + "' && " + env + " '" VOXANOM_CLI_PATH "' " + args + " >/dev/null 2>&1";
  return std::system(cmd.c_str());
}

Outcome determinism() {
  Outcome o;
  TempDir root("accept_det");
  const std::string config = R"({
    "seed": 808,
    "phantoms": {"count": 2, "dims": 32},
    "shapes": {"count": 8, "canvas": 16},
    "synthesize": {"sources": ["phantoms"], "patch_dims": 16, "count_per_volume": 3, "bank_capacity": 4},
    "validation": {"sources": ["phantoms"], "region_min": 4, "region_max": 12,
                   "counts": {"healthy": 3, "add_noise": 2, "add_noise_smooth": 2, "deform": 2, "reflect": 2,
                              "shift": 2, "uniform_noise": 2, "uniform_noise_smooth": 2}},
    "fusion": {"patch": 16, "overlap": 0.5}
  })";

  const std::vector<std::string> commands = {
      "make-phantoms",
      "build-shapes",
      "synthesize",
      "make-validation",
      "score --out scores",
      "score --windows windows --out fused",
      "evaluate --scores scores --out eval_pixel.json",
      "evaluate --scores fused --task sample --subset baseline --out eval_sample.json",
      "config --out effective.json",
  };
  struct Variant {
    std::string name;
    std::string workers;
    std::string env;
  };
  const std::vector<Variant> variants = {
      {"w1", "1", ""}, {"w4", "4", ""}, {"w4_again", "4", ""}, {"w3_scalar", "3", "VOXANOM_ISA=scalar"}};

  std::vector<std::vector<std::pair<std::string, std::string>>> trees;
  for (const auto& v : variants) {
    const fs::path dir = root / v.name;
    fs::create_directories(dir);
    std::ofstream(dir / "run.json") << config;
    for (const auto& c : commands) {
      if (c.rfind("score --windows", 0) == 0) {
        // Window scores derived from the images, written identically for every variant.
        const auto manifest = read_validation_manifest(dir / "validation" / "validation_manifest.json");
        FusionConfig cfg;
        cfg.patch = Dims3::cube(16);
        for (const auto& e : manifest) {
          const Volume3D img = read_volume(dir / "validation" / e.image_path);
          int n = 0;
          for (const auto& w : plan_windows(img.dims(), cfg)) {
            Grid3<float> s(w.size);
            for (int64_t z = 0; z < w.size.z; ++z)
              for (int64_t y = 0; y < w.size.y; ++y)
                for (int64_t x = 0; x < w.size.x; ++x)
                  s.at(x, y, z) = img.at(w.start.x + x, w.start.y + y, w.start.z + z);
            write_window_score(dir / "windows" / e.id, "w" + std::to_string(n++), {w, s}, img.dims());
          }
        }
      }
      const int rc = run_cli(dir, "--config run.json --workers " + v.workers + " " + c, v.env);
      if (rc != 0) o.fail(v.name + ": '" + c + "' exited with status " + std::to_string(rc));
    }
    auto tree = testing::tree_bytes(dir);
    std::erase_if(tree, [](const auto& f) { return f.first == "run.json"; });
    trees.push_back(std::move(tree));
  }
  for (size_t i = 1; i < trees.size(); ++i) {
    if (trees[i].size() != trees[0].size()) {
      o.fail(variants[i].name + " produced a different file set");
      continue;
    }
    for (size_t f = 0; f < trees[0].size(); ++f) {
      if (trees[i][f] != trees[0][f]) {
        o.fail(variants[i].name + " differs in " + trees[i][f].first);
        break;
      }
    }
  }
  if (o.pass)
    o.detail = fmt("%.0f commands x %.0f runs (workers 1/4/4/3-scalar), %.0f files bitwise identical",
                   static_cast<double>(commands.size()), static_cast<double>(variants.size()),
                   static_cast<double>(trees[0].size()));
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks = {
      {"interpolation identities", interpolation_identities},
      {"edge smoothing", edge_smoothing},
      {"brush-walk shapes", brush_walks},
      {"average precision oracle", ap_oracle},
      {"sliding-window fusion", fusion},
      {"validation set", validation_set},
      {"directional end-to-end", directional_e2e},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, fn] : checks) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
