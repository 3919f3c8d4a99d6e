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

#include "voxanom/corruption.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>

#include <json.hpp>

#include "voxanom/parallel.hpp"
#include "voxanom/simd/kernels.hpp"

namespace voxanom {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string_view to_string(ShapeFamily f) {
  switch (f) {
    case ShapeFamily::kCuboid:
      return "cuboid";
    case ShapeFamily::kSphere:
      return "sphere";
    case ShapeFamily::kBrush:
      return "brush";
  }
  return "?";
}

std::string_view to_string(ShapeMode m) {
  switch (m) {
    case ShapeMode::kCuboid:
      return "cuboid";
    case ShapeMode::kSphere:
      return "sphere";
    case ShapeMode::kBrush:
      return "brush";
    case ShapeMode::kComplex:
      return "complex";
  }
  return "?";
}

std::string_view to_string(EdgeMode m) {
  switch (m) {
    case EdgeMode::kHard:
      return "hard";
    case EdgeMode::kSmoothed:
      return "smoothed";
    case EdgeMode::kMixed:
      return "mixed";
  }
  return "?";
}

std::optional<ShapeFamily> parse_shape_family(std::string_view s) {
  for (auto f : {ShapeFamily::kCuboid, ShapeFamily::kSphere, ShapeFamily::kBrush})
    if (to_string(f) == s) return f;
  return std::nullopt;
}

std::optional<ShapeMode> parse_shape_mode(std::string_view s) {
  for (auto m : {ShapeMode::kCuboid, ShapeMode::kSphere, ShapeMode::kBrush, ShapeMode::kComplex})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

std::optional<EdgeMode> parse_edge_mode(std::string_view s) {
  for (auto m : {EdgeMode::kHard, EdgeMode::kSmoothed, EdgeMode::kMixed})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

void GenerationConfig::validate() const {
  if (!(alpha_min >= 0.0 && alpha_min <= alpha_max && alpha_max <= 1.0)) {
    throw ValidationError("alpha_range must satisfy 0 <= min <= max <= 1");
  }
  if (kernel_sizes.empty()) throw ValidationError("kernel_sizes must not be empty");
  for (int k : kernel_sizes) {
    if (k < 3 || k % 2 == 0) {
      throw ValidationError("kernel_sizes entries must be odd and >= 3, got " + std::to_string(k));
    }
  }
  if (!(foreground_threshold >= 0.0 && foreground_threshold <= 1.0)) {
    throw ValidationError("foreground_threshold must lie in [0, 1]");
  }
  if (location_retries < 1) throw ValidationError("location_retries must be >= 1");
  if (!(affine.scale_min > 0.0 && affine.scale_min <= affine.scale_max)) {
    throw ValidationError("affine scale range must satisfy 0 < min <= max");
  }
  if (affine.max_attempts < 1) throw ValidationError("affine max_attempts must be >= 1");
  if (!(patch_augment.max_noise_sigma >= 0.0) || !(patch_augment.max_shift >= 0.0) ||
      !(patch_augment.max_small_rotation_deg >= 0.0) ||
      !(patch_augment.small_rotation_probability >= 0.0 &&
        patch_augment.small_rotation_probability <= 1.0)) {
    throw ValidationError("patch augmentation magnitudes must be non-negative");
  }
}

Index3 sample_location(Dims3 image_dims, Dims3 patch_dims, const ForegroundMask* fg, Rng& rng,
                       double threshold, int retries) {
  if (!patch_dims.positive() || !strictly_smaller(patch_dims, image_dims)) {
    throw ValidationError("patch dims " + to_string(patch_dims) +
                          " must be strictly smaller than image dims " + to_string(image_dims));
  }
  if (fg != nullptr && !(fg->dims() == image_dims)) {
    throw ValidationError("foreground mask dims do not match image dims");
  }
  const int attempts = fg == nullptr ? 1 : std::max(1, retries);
  const double needed = threshold * static_cast<double>(patch_dims.count());
  for (int i = 0; i < attempts; ++i) {
    const Index3 c{rng.uniform_int(0, image_dims.x - patch_dims.x),
                   rng.uniform_int(0, image_dims.y - patch_dims.y),
                   rng.uniform_int(0, image_dims.z - patch_dims.z)};
    if (fg == nullptr) return c;
    int64_t inside = 0;
    for (int64_t z = 0; z < patch_dims.z; ++z)
      for (int64_t y = 0; y < patch_dims.y; ++y) {
        const auto row = fg->row(c.y + y, c.z + z).subspan(static_cast<size_t>(c.x),
                                                            static_cast<size_t>(patch_dims.x));
        inside += std::count(row.begin(), row.end(), uint8_t{1});
      }
    if (inside > 0 && static_cast<double>(inside) >= needed) return c;
  }
  throw GenerationError("no placement with foreground fraction >= " + std::to_string(threshold) +
                        " after " + std::to_string(attempts) + " attempts");
}

CorruptedSample interpolate(const Volume3D& x, const Grid3<float>& patch, const ShapeMask& mask,
                            double alpha, Index3 corner) {
  const Dims3& pd = patch.dims();
  if (!(mask.dims() == pd)) {
    throw ValidationError("mask dims " + to_string(mask.dims()) + " differ from patch dims " +
                          to_string(pd));
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ValidationError("alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
  const Dims3& d = x.dims();
  if (corner.x < 0 || corner.y < 0 || corner.z < 0 || corner.x + pd.x > d.x ||
      corner.y + pd.y > d.y || corner.z + pd.z > d.z) {
    throw ValidationError("patch at corner " + to_string(corner) + " with dims " + to_string(pd) +
                          " exceeds image dims " + to_string(d));
  }

  const float a = static_cast<float>(alpha);
  CorruptedSample out{x, AlphaMap(d, 0.0f), {}};
  out.record.alpha = alpha;
  out.record.corner = corner;
  out.record.patch_dims = pd;

  const auto& k = simd::active();
  const size_t nx = static_cast<size_t>(pd.x);
  for (int64_t z = 0; z < pd.z; ++z) {
    for (int64_t y = 0; y < pd.y; ++y) {
      const auto m = mask.row(y, z);
      float* alpha_row = out.label.row(y + corner.y, z + corner.z).data() + corner.x;
      for (size_t i = 0; i < nx; ++i) alpha_row[i] = a * m[i];
      const float* src = x.grid().row(y + corner.y, z + corner.z).data() + corner.x;
      float* dst = out.image.grid().row(y + corner.y, z + corner.z).data() + corner.x;
      k.blend(src, patch.row(y, z).data(), alpha_row, dst, nx);
    }
  }
  return out;
}

namespace {

int pick_kernel(const GenerationConfig& cfg, Rng& rng) {
  const bool smooth = cfg.edges == EdgeMode::kSmoothed ||
                      (cfg.edges == EdgeMode::kMixed && rng.bernoulli(0.5));
  if (!smooth) return 0;
  return cfg.kernel_sizes[static_cast<size_t>(
      rng.uniform_int(0, static_cast<int64_t>(cfg.kernel_sizes.size()) - 1))];
}

ShapeFamily pick_family(ShapeMode mode, Rng& rng) {
  switch (mode) {
    case ShapeMode::kCuboid:
      return ShapeFamily::kCuboid;
    case ShapeMode::kSphere:
      return ShapeFamily::kSphere;
    case ShapeMode::kBrush:
      return ShapeFamily::kBrush;
    case ShapeMode::kComplex:
      break;
  }
  return static_cast<ShapeFamily>(rng.uniform_int(0, 2));
}

}  // namespace

CorruptedSample generate_sample(const Volume3D& x, const PatchBank& bank, const ShapeLibrary& library,
                                const GenerationConfig& cfg, Rng& rng) {
  if (bank.empty()) throw ValidationError("patch bank is empty");
  const Dims3 pd = bank.patch_dims();

  const ForeignPatch& drawn = bank.at(rng.uniform_int(0, bank.size() - 1));
  const ForeignPatch texture = augment_patch(drawn, rng, cfg.patch_augment);

  const ShapeFamily family = pick_family(cfg.shapes, rng);
  ShapeMask shape;
  switch (family) {
    case ShapeFamily::kCuboid:
      shape = random_cuboid(pd, rng);
      break;
    case ShapeFamily::kSphere:
      shape = random_sphere(pd, rng);
      break;
    case ShapeFamily::kBrush: {
      if (library.shapes.empty()) throw ValidationError("brush shapes requested but the shape library is empty");
      const ShapeMask& s = library.shapes[static_cast<size_t>(
          rng.uniform_int(0, static_cast<int64_t>(library.shapes.size()) - 1))];
      if (!(s.dims() == pd)) {
        throw ValidationError("shape library canvas " + to_string(s.dims()) +
                              " does not match patch dims " + to_string(pd));
      }
      shape = s;
      break;
    }
  }
  shape = augment_shape(shape, random_affine(pd, cfg.affine, rng), rng, cfg.affine);

  const int kernel = pick_kernel(cfg, rng);
  if (kernel > 0) shape = smooth_mask(shape, kernel);

  const double alpha = static_cast<float>(rng.uniform(cfg.alpha_min, cfg.alpha_max));

  std::optional<ForegroundMask> fg;
  if (cfg.foreground_only) fg = foreground_mask(x);
  const Index3 corner = sample_location(x.dims(), pd, fg ? &*fg : nullptr, rng,
                                        cfg.foreground_threshold, cfg.location_retries);

  CorruptedSample out = interpolate(x, texture.data, shape, alpha, corner);
  out.record.shape_family = family;
  out.record.kernel_size = kernel;
  out.record.seed = rng.seed();
  out.record.foreground_restricted = cfg.foreground_only;
  return out;
}

namespace {

json record_to_json(const AnomalyRecord& r) {
  json j;
  j["shape_family"] = to_string(r.shape_family);
  j["alpha"] = r.alpha;
  j["corner"] = {r.corner.x, r.corner.y, r.corner.z};
  j["patch_dims"] = {r.patch_dims.x, r.patch_dims.y, r.patch_dims.z};
  j["kernel_size"] = r.kernel_size;
  j["seed"] = r.seed;
  j["foreground_restricted"] = r.foreground_restricted;
  return j;
}

std::string numbered(const char* prefix, int64_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%05lld.rvol", prefix, static_cast<long long>(i));
  return buf;
}

struct Job {
  int64_t index;
  size_t source;
  PatchBank bank;
};

constexpr int64_t kChunk = 64;

}  // namespace

DatasetManifest emit_dataset(const std::vector<fs::path>& sources, const GenerationConfig& cfg,
                             const ShapeLibrary& library, const DatasetOptions& opts,
                             const fs::path& out_dir) {
  cfg.validate();
  if (opts.count_per_volume < 0) throw ValidationError("count_per_volume must be >= 0");
  if (!opts.patch_dims.positive()) throw ValidationError("patch_dims must be positive");

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  DatasetManifest manifest;
  std::vector<Volume3D> volumes;
  std::vector<std::string> names;
  for (const auto& src : sources) {
    try {
      Volume3D v = read_volume(src);
      if (!strictly_smaller(opts.patch_dims, v.dims())) {
        throw ValidationError("dims " + to_string(v.dims()) + " not larger than patch dims " +
                              to_string(opts.patch_dims));
      }
      volumes.push_back(std::move(v));
      names.push_back(src.filename().string());
    } catch (const Error& e) {
      manifest.errors.push_back(src.string() + ": " + e.what());
    }
  }

  const int64_t total = static_cast<int64_t>(volumes.size()) * opts.count_per_volume;
  std::vector<DatasetEntry> entries(static_cast<size_t>(total));
  std::vector<std::string> sample_errors(static_cast<size_t>(total));

  if (total > 0) {
    const Rng root(opts.seed);
    Rng bank_rng = root.fork("bank");
    PatchBank bank(opts.bank_capacity, opts.patch_dims);
    for (int64_t k = 0; k < opts.bank_capacity; ++k) {
      const size_t s = static_cast<size_t>(k) % volumes.size();
      bank.insert(sample_patch_from_volume(volumes[s], opts.patch_dims, bank_rng, names[s]), bank_rng);
    }

    // Bank evolution is sequential; each sample sees the snapshot taken just
    // before its own image contributes a replacement patch.
    for (int64_t begin = 0; begin < total; begin += kChunk) {
      const int64_t end = std::min(total, begin + kChunk);
      std::vector<Job> jobs;
      for (int64_t i = begin; i < end; ++i) {
        const size_t s = static_cast<size_t>(i / opts.count_per_volume);
        jobs.push_back({i, s, bank});
        bank.insert(sample_patch_from_volume(volumes[s], opts.patch_dims, bank_rng, names[s]), bank_rng);
      }
      parallel_for(static_cast<int64_t>(jobs.size()), opts.workers, [&](int64_t j) {
        const Job& job = jobs[static_cast<size_t>(j)];
        const size_t slot = static_cast<size_t>(job.index);
        Rng rng(derive_seed(opts.seed, static_cast<uint64_t>(job.index)));
        try {
          const CorruptedSample sample = generate_sample(volumes[job.source], job.bank, library, cfg, rng);
          DatasetEntry e;
          e.image_path = numbered("image", job.index);
          e.label_path = numbered("label", job.index);
          e.source = names[job.source];
          e.record = sample.record;
          write_volume(sample.image, out_dir / e.image_path);
          write_volume(Volume3D(sample.label, sample.image.spacing()), out_dir / e.label_path);
          entries[slot] = std::move(e);
        } catch (const Error& e) {
          sample_errors[slot] = "sample " + std::to_string(job.index) + ": " + e.what();
        }
      });
    }
  }

  json doc = json::array();
  for (size_t i = 0; i < entries.size(); ++i) {
    if (!sample_errors[i].empty()) {
      manifest.errors.push_back(sample_errors[i]);
      continue;
    }
    const DatasetEntry& e = entries[i];
    doc.push_back({{"image_path", e.image_path},
                   {"label_path", e.label_path},
                   {"source", e.source},
                   {"record", record_to_json(e.record)}});
    manifest.entries.push_back(e);
  }

  std::ofstream out(out_dir / "manifest.json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (out_dir / "manifest.json").string());
  out << doc.dump(1) << '\n';
  if (!manifest.errors.empty()) {
    std::ofstream err(out_dir / "errors.json", std::ios::trunc);
    err << json(manifest.errors).dump(1) << '\n';
  }
  return manifest;
}

}  // namespace voxanom
