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

#include "voxanom/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "voxanom/config.hpp"
#include "voxanom/corruption.hpp"
#include "voxanom/evaluation.hpp"
#include "voxanom/parallel.hpp"
#include "voxanom/phantom.hpp"
#include "voxanom/scoring.hpp"
#include "voxanom/shapes.hpp"
#include "voxanom/validation.hpp"

namespace voxanom::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// Flag values; unset flags leave the config untouched.
struct Overrides {
  std::optional<std::string> config;
  std::optional<uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;

  // build-shapes
  std::optional<int64_t> count;
  std::optional<int64_t> canvas;
  std::optional<std::vector<double>> step_sigma;

  // synthesize
  std::vector<std::string> sources;
  std::optional<std::string> shape_library;
  std::optional<std::string> shapes;
  std::optional<std::string> mode;
  std::optional<int64_t> patch;
  std::optional<int64_t> bank_capacity;
  std::optional<bool> foreground_only;

  // make-validation / evaluate
  std::vector<std::string> families;
  std::optional<int64_t> region_min;
  std::optional<int64_t> region_max;

  // score / evaluate
  std::optional<std::string> manifest;
  std::optional<std::string> windows;
  std::optional<std::string> scores;
  std::optional<std::string> task;
  std::optional<std::string> subset;
  std::optional<double> subsample;
  std::optional<double> overlap;
  std::optional<int64_t> fusion_patch;

  // make-phantoms
  std::optional<int64_t> dims;
};

std::vector<AnomalyFamily> parse_families(const std::vector<std::string>& names) {
  std::vector<AnomalyFamily> out;
  for (const auto& n : names) {
    const auto f = parse_family(n);
    if (!f) throw ValidationError("--families: unknown anomaly family '" + n + "'");
    out.push_back(*f);
  }
  return out;
}

RunConfig effective_config(const std::string& command, const Overrides& o) {
  RunConfig cfg = o.config ? load_config(*o.config) : RunConfig{};
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;

  if (command == "build-shapes") {
    if (o.count) cfg.shapes.count = *o.count;
    if (o.canvas) cfg.shapes.canvas = Dims3::cube(*o.canvas);
    if (o.step_sigma) cfg.shapes.step_sigma = *o.step_sigma;
    if (o.out) cfg.shapes.out = *o.out;
  } else if (command == "synthesize") {
    auto& g = cfg.synthesize.generation;
    if (!o.sources.empty()) cfg.synthesize.sources = o.sources;
    if (o.shape_library) cfg.synthesize.shape_library = *o.shape_library;
    if (o.count) cfg.synthesize.count_per_volume = *o.count;
    if (o.patch) cfg.synthesize.patch_dims = Dims3::cube(*o.patch);
    if (o.bank_capacity) cfg.synthesize.bank_capacity = *o.bank_capacity;
    if (o.foreground_only) g.foreground_only = *o.foreground_only;
    if (o.shapes) {
      const auto m = parse_shape_mode(*o.shapes);
      if (!m) throw ValidationError("--shapes: unknown shape mode '" + *o.shapes + "'");
      g.shapes = *m;
    }
    if (o.mode) {
      const auto m = parse_edge_mode(*o.mode);
      if (!m) throw ValidationError("--mode: unknown edge mode '" + *o.mode + "'");
      g.edges = *m;
    }
    if (o.out) cfg.synthesize.out = *o.out;
  } else if (command == "make-validation") {
    if (!o.sources.empty()) cfg.validation.sources = o.sources;
    if (!o.families.empty()) {
      const auto keep = parse_families(o.families);
      for (auto& [f, n] : cfg.validation.counts) {
        if (std::find(keep.begin(), keep.end(), f) == keep.end()) n = 0;
      }
    }
    if (o.region_min) cfg.validation.region_min = *o.region_min;
    if (o.region_max) cfg.validation.region_max = *o.region_max;
    if (o.out) cfg.validation.out = *o.out;
  } else if (command == "score") {
    if (o.manifest) cfg.score.manifest = *o.manifest;
    if (o.windows) cfg.score.windows = *o.windows;
    if (o.overlap) cfg.fusion.overlap = *o.overlap;
    if (o.fusion_patch) cfg.fusion.patch = Dims3::cube(*o.fusion_patch);
    if (o.out) cfg.score.out = *o.out;
  } else if (command == "evaluate") {
    if (o.manifest) cfg.evaluate.manifest = *o.manifest;
    if (o.scores) cfg.evaluate.scores = *o.scores;
    if (o.task) cfg.evaluate.task = parse_task(*o.task);
    if (o.subset) cfg.evaluate.subset = parse_subset(*o.subset);
    if (!o.families.empty()) cfg.evaluate.families = parse_families(o.families);
    if (o.subsample) cfg.evaluate.subsample = *o.subsample;
    if (o.out) cfg.evaluate.out = *o.out;
  } else if (command == "make-phantoms") {
    if (o.count) cfg.phantoms.count = *o.count;
    if (o.dims) cfg.phantoms.dims = Dims3::cube(*o.dims);
    if (o.out) cfg.phantoms.out = *o.out;
  }
  cfg.validate();
  return cfg;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

// Files are taken as given; directories contribute their *.rvol files in name order.
std::vector<fs::path> expand_sources(const std::vector<std::string>& sources) {
  std::vector<fs::path> out;
  for (const auto& s : sources) {
    const fs::path p(s);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.path().extension() == ".rvol") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

int cmd_build_shapes(const RunConfig& cfg, std::ostream& out) {
  const auto grid = cfg.shapes.grid();
  const ShapeLibrary lib = build_shape_library(cfg.shapes.count, grid, cfg.seed, cfg.resolved_workers());
  save_shape_library(lib, cfg.shapes.out);

  std::vector<int64_t> voxels;
  for (const auto& s : lib.shapes) voxels.push_back(s.nonzero_count());
  std::vector<int64_t> sorted = voxels;
  std::sort(sorted.begin(), sorted.end());
  const int64_t lo = sorted.front();
  const int64_t hi = sorted.back();
  out << "built " << lib.shapes.size() << " shapes on a " << to_string(cfg.shapes.canvas) << " canvas ("
      << grid.size() << " grid points) -> " << cfg.shapes.out << "\n";
  out << "voxels: min " << lo << ", median " << sorted[sorted.size() / 2] << ", max " << hi << "\n";
  constexpr int kBins = 8;
  std::vector<int64_t> bins(kBins, 0);
  const double width = std::max(1.0, static_cast<double>(hi - lo + 1) / kBins);
  for (int64_t v : voxels) {
    bins[static_cast<size_t>(std::min<int64_t>(kBins - 1, static_cast<int64_t>(static_cast<double>(v - lo) / width)))] += 1;
  }
  for (int b = 0; b < kBins; ++b) {
    const auto from = static_cast<int64_t>(static_cast<double>(lo) + b * width);
    out << "  [" << from << ", " << static_cast<int64_t>(static_cast<double>(lo) + (b + 1) * width) << ") "
        << bins[static_cast<size_t>(b)] << "\n";
  }
  return kExitOk;
}

int cmd_synthesize(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto sources = expand_sources(cfg.synthesize.sources);
  ShapeLibrary lib;
  if (cfg.synthesize.shape_library.empty()) {
    ShapesSection shapes = cfg.shapes;
    shapes.canvas = cfg.synthesize.patch_dims;
    lib = build_shape_library(shapes.count, shapes.grid(), cfg.seed, cfg.resolved_workers());
  } else {
    lib = load_shape_library(cfg.synthesize.shape_library);
    if (!lib.shapes.empty() && !(lib.shapes.front().dims() == cfg.synthesize.patch_dims)) {
      throw ValidationError("synthesize.patch_dims: " + to_string(cfg.synthesize.patch_dims) +
                            " does not match the shape library canvas " + to_string(lib.shapes.front().dims()));
    }
  }
  DatasetOptions opts;
  opts.patch_dims = cfg.synthesize.patch_dims;
  opts.bank_capacity = cfg.synthesize.bank_capacity;
  opts.count_per_volume = cfg.synthesize.count_per_volume;
  opts.seed = cfg.seed;
  opts.workers = cfg.resolved_workers();
  const DatasetManifest m = emit_dataset(sources, cfg.synthesize.generation, lib, opts, cfg.synthesize.out);
  out << "wrote " << m.entries.size() << " samples (" << to_string(cfg.synthesize.generation.shapes) << " shapes, "
      << to_string(cfg.synthesize.generation.edges) << " edges) -> " << cfg.synthesize.out << "\n";
  for (const auto& e : m.errors) err << "error: " << e << "\n";
  return m.errors.empty() ? kExitOk : kExitRuntime;
}

int cmd_make_validation(const RunConfig& cfg, std::ostream& out) {
  ValidationSetSpec spec;
  spec.counts = cfg.validation.counts;
  spec.seed = cfg.seed;
  spec.region_min = cfg.validation.region_min;
  spec.region_max = cfg.validation.region_max;
  spec.validate();

  std::vector<Volume3D> volumes;
  std::vector<std::string> names;
  if (spec.total() > 0) {
    const auto sources = expand_sources(cfg.validation.sources);
    if (sources.empty()) throw ValidationError("validation.sources: no source volumes given");
    for (const auto& s : sources) {
      volumes.push_back(read_volume(s));
      names.push_back(s.filename().string());
    }
  }
  const auto manifest = build_validation_set(volumes, names, spec, cfg.validation.out, cfg.resolved_workers());
  std::map<AnomalyFamily, int64_t> per_family;
  int64_t degenerate = 0;
  for (const auto& e : manifest) {
    per_family[e.family] += 1;
    degenerate += e.degenerate ? 1 : 0;
  }
  out << "wrote " << manifest.size() << " validation cases -> " << cfg.validation.out << "\n";
  for (const auto& [f, n] : per_family) out << "  " << to_string(f) << ": " << n << "\n";
  if (degenerate > 0) out << "  degenerate (image unchanged): " << degenerate << "\n";
  return kExitOk;
}

int cmd_score(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const fs::path manifest_path(cfg.score.manifest);
  const auto manifest = read_validation_manifest(manifest_path);
  const fs::path dir = manifest_path.parent_path();
  const fs::path out_dir(cfg.score.out);
  ensure_dir(out_dir);
  const bool fuse = !cfg.score.windows.empty();

  std::vector<std::string> errors(manifest.size());
  std::vector<char> validation_failure(manifest.size(), 0);
  parallel_for(static_cast<int64_t>(manifest.size()), cfg.resolved_workers(), [&](int64_t i) {
    const auto& e = manifest[static_cast<size_t>(i)];
    try {
      const Volume3D image = read_volume(dir / e.image_path);
      ScoreMap map;
      if (fuse) {
        const WindowSet ws = read_window_dir(fs::path(cfg.score.windows) / e.id);
        if (!(ws.volume_dims == image.dims())) {
          throw ValidationError("window volume_dims " + to_string(ws.volume_dims) + " do not match image dims " +
                                to_string(image.dims()));
        }
        map = fuse_scores(image.dims(), ws.windows, cfg.fusion);
      } else {
        map = baseline_gradient_scorer(image);
      }
      write_volume(Volume3D(std::move(map), image.spacing()), out_dir / (e.id + ".rvol"));
    } catch (const ValidationError& ex) {
      errors[static_cast<size_t>(i)] = ex.what();
      validation_failure[static_cast<size_t>(i)] = 1;
    } catch (const Error& ex) {
      errors[static_cast<size_t>(i)] = ex.what();
    }
  });

  int64_t failed = 0;
  bool only_validation = true;
  for (size_t i = 0; i < errors.size(); ++i) {
    if (errors[i].empty()) continue;
    ++failed;
    only_validation = only_validation && validation_failure[i];
    err << "error: " << manifest[i].id << ": " << errors[i] << "\n";
  }
  out << "scored " << (static_cast<int64_t>(manifest.size()) - failed) << "/" << manifest.size() << " cases ("
      << (fuse ? "window fusion" : "baseline gradient") << ") -> " << out_dir.string() << "\n";
  if (failed == 0) return kExitOk;
  return only_validation ? kExitValidation : kExitRuntime;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
  const fs::path manifest_path(cfg.evaluate.manifest);
  const auto manifest = read_validation_manifest(manifest_path);
  EvalOptions opt;
  opt.subset = cfg.evaluate.subset;
  opt.families = cfg.evaluate.families;
  opt.subsample = cfg.evaluate.subsample;
  opt.subsample_seed = cfg.seed;
  opt.workers = cfg.resolved_workers();
  const fs::path dir = manifest_path.parent_path();
  const EvalReport r = cfg.evaluate.task == EvalTask::kPixel
                           ? evaluate_pixelwise(manifest, dir, cfg.evaluate.scores, opt)
                           : evaluate_samplewise(manifest, dir, cfg.evaluate.scores, opt);

  // Echo only what shaped the numbers, so the report does not change with --workers.
  json echo = json::parse(config_to_json(cfg, -1)).at("evaluate");
  echo["seed"] = cfg.seed;
  // The report path itself would make otherwise identical reports differ.
  echo.erase("out");
  const fs::path report_path(cfg.evaluate.out);
  if (report_path.has_parent_path()) ensure_dir(report_path.parent_path());
  write_eval_report(r, report_path, echo.dump());

  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", *r.ap_overall);
  out << to_string(r.task) << "-wise AP (" << to_string(r.subset) << ", N=" << r.n_cases << "): " << buf << "\n";
  for (const auto& [f, ap] : r.ap_by_family) {
    out << "  " << to_string(f) << " (" << r.cases_by_family.at(f) << "): ";
    if (ap) {
      std::snprintf(buf, sizeof buf, "%.6f", *ap);
      out << buf << "\n";
    } else {
      out << "n/a\n";
    }
  }
  std::snprintf(buf, sizeof buf, "%.4f", r.positive_rate);
  out << "positive rate " << buf << " over " << r.n_items << " items -> " << report_path.string() << "\n";
  return kExitOk;
}

int cmd_make_phantoms(const RunConfig& cfg, std::ostream& out) {
  const fs::path dir(cfg.phantoms.out);
  ensure_dir(dir);
  PhantomParams p;
  p.dims = cfg.phantoms.dims;
  parallel_for(cfg.phantoms.count, cfg.resolved_workers(), [&](int64_t i) {
    char name[48];
    std::snprintf(name, sizeof name, "phantom_%03lld.rvol", static_cast<long long>(i));
    write_volume(make_phantom(p, derive_seed(cfg.seed, static_cast<uint64_t>(i))), dir / name);
  });
  out << "wrote " << cfg.phantoms.count << " phantoms " << to_string(cfg.phantoms.dims) << " -> " << dir.string()
      << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"voxanom: synthetic 3D anomaly generation, score fusion and evaluation", "voxanom"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;
  app.add_option("--config", o.config, "JSON run configuration");
  app.add_option("--seed", o.seed, "Root seed");
  app.add_option("--workers", o.workers, "Worker threads (0 = all cores)");

  auto* shapes = app.add_subcommand("build-shapes", "Build a brush-walk shape library");
  shapes->add_option("--count", o.count, "Number of shapes");
  shapes->add_option("--canvas", o.canvas, "Cubic canvas edge length");
  shapes->add_option("--step-sigma", o.step_sigma, "Walk step sigmas (grid axis)");
  shapes->add_option("--out", o.out, "Output directory");

  auto* synth = app.add_subcommand("synthesize", "Generate a training set of corrupted images and alpha labels");
  synth->add_option("--sources", o.sources, "Source volumes (.rvol files or directories)");
  synth->add_option("--shape-library", o.shape_library, "Shape library directory (empty: build in memory)");
  synth->add_option("--shapes", o.shapes, "cuboid | sphere | brush | complex");
  synth->add_option("--mode", o.mode, "Edge mode: hard | smoothed | mixed");
  synth->add_option("--count", o.count, "Samples per source volume");
  synth->add_option("--patch", o.patch, "Cubic patch edge length");
  synth->add_option("--bank-capacity", o.bank_capacity, "Memory bank capacity");
  synth->add_option("--foreground-only", o.foreground_only, "Restrict anomalies to the foreground");
  synth->add_option("--out", o.out, "Output directory");

  auto* val = app.add_subcommand("make-validation", "Build the synthetic validation set");
  val->add_option("--sources", o.sources, "Held-out volumes (.rvol files or directories)");
  val->add_option("--families", o.families, "Keep only these families");
  val->add_option("--region-min", o.region_min, "Smallest region edge");
  val->add_option("--region-max", o.region_max, "Largest region edge");
  val->add_option("--out", o.out, "Output directory");

  auto* score = app.add_subcommand("score", "Score validation cases (baseline scorer or window fusion)");
  score->alias("score-fuse");
  score->add_option("--manifest", o.manifest, "validation_manifest.json");
  score->add_option("--windows", o.windows, "Directory with one window directory per case id");
  score->add_option("--overlap", o.overlap, "Window overlap fraction");
  score->add_option("--patch", o.fusion_patch, "Cubic window edge length");
  score->add_option("--out", o.out, "Output directory for score maps");

  auto* eval = app.add_subcommand("evaluate", "Average precision of score maps against truth");
  eval->add_option("--manifest", o.manifest, "validation_manifest.json");
  eval->add_option("--scores", o.scores, "Directory of <id>.rvol score maps");
  eval->add_option("--task", o.task, "pixel | sample");
  eval->add_option("--subset", o.subset, "baseline | full");
  eval->add_option("--families", o.families, "Keep only these families");
  eval->add_option("--subsample", o.subsample, "Per-voxel keep probability");
  eval->add_option("--out", o.out, "Report path");

  auto* cfg_cmd = app.add_subcommand("config", "Print the effective configuration");
  cfg_cmd->add_option("--out", o.out, "Write to this path instead of stdout");

  auto* phantoms = app.add_subcommand("make-phantoms", "Write procedural normal volumes");
  phantoms->add_option("--count", o.count, "Number of volumes");
  phantoms->add_option("--dims", o.dims, "Cubic edge length");
  phantoms->add_option("--out", o.out, "Output directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const RunConfig cfg = effective_config(command, o);
    if (command == "build-shapes") return cmd_build_shapes(cfg, out);
    if (command == "synthesize") return cmd_synthesize(cfg, out, err);
    if (command == "make-validation") return cmd_make_validation(cfg, out);
    if (command == "score") return cmd_score(cfg, out, err);
    if (command == "evaluate") return cmd_evaluate(cfg, out);
    if (command == "make-phantoms") return cmd_make_phantoms(cfg, out);
    if (command == "config") {
      const std::string text = config_to_json(cfg) + "\n";
      if (o.out) {
        std::ofstream f(*o.out, std::ios::trunc);
        if (!f) throw IoError("cannot write " + *o.out);
        f << text;
      } else {
        out << text;
      }
      return kExitOk;
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}

}  // namespace voxanom::cli
