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

#include "voxanom/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>

#include <json.hpp>

#include "voxanom/parallel.hpp"
#include "voxanom/simd/kernels.hpp"

namespace voxanom {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

void FusionConfig::validate() const {
  if (!patch.positive()) throw ValidationError("fusion patch must be positive, got " + to_string(patch));
  if (!(overlap >= 0.0 && overlap < 1.0)) {
    throw ValidationError("fusion overlap must lie in [0, 1), got " + std::to_string(overlap));
  }
  if (!(sigma_fraction > 0.0) || !std::isfinite(sigma_fraction)) {
    throw ValidationError("fusion sigma_fraction must be positive");
  }
}

std::vector<int64_t> plan_axis(int64_t dim, int64_t patch, double overlap) {
  if (dim < 1 || patch < 1) throw ValidationError("plan_axis needs positive dim and patch");
  patch = std::min(patch, dim);
  const int64_t stride =
      std::max<int64_t>(1, static_cast<int64_t>(std::floor(static_cast<double>(patch) * (1.0 - overlap))));
  std::vector<int64_t> starts{0};
  int64_t s = 0;
  while (s + patch < dim) {
    s += stride;
    const int64_t clamped = std::min(s, dim - patch);
    if (clamped != starts.back()) starts.push_back(clamped);
  }
  return starts;
}

std::vector<Window> plan_windows(Dims3 volume, const FusionConfig& cfg) {
  cfg.validate();
  if (!volume.positive()) throw ValidationError("volume dims must be positive");
  const auto xs = plan_axis(volume.x, cfg.patch.x, cfg.overlap);
  const auto ys = plan_axis(volume.y, cfg.patch.y, cfg.overlap);
  const auto zs = plan_axis(volume.z, cfg.patch.z, cfg.overlap);
  const Dims3 size{std::min(cfg.patch.x, volume.x), std::min(cfg.patch.y, volume.y),
                   std::min(cfg.patch.z, volume.z)};
  std::vector<Window> out;
  out.reserve(xs.size() * ys.size() * zs.size());
  for (int64_t z : zs)
    for (int64_t y : ys)
      for (int64_t x : xs) out.push_back({{x, y, z}, size});
  return out;
}

std::vector<double> gaussian_profile(int64_t size, double sigma_fraction) {
  const double sigma = sigma_fraction * static_cast<double>(size);
  const double center = static_cast<double>(size) / 2.0;
  std::vector<double> w(static_cast<size_t>(size));
  for (int64_t i = 0; i < size; ++i) {
    const double t = static_cast<double>(i) + 0.5 - center;
    w[static_cast<size_t>(i)] = std::exp(-(t * t) / (2.0 * sigma * sigma));
  }
  return w;
}

ScoreMap fuse_scores(Dims3 volume, std::span<const WindowScore> windows, const FusionConfig& cfg) {
  cfg.validate();
  if (!volume.positive()) throw ValidationError("volume dims must be positive");
  const size_t n = static_cast<size_t>(volume.count());
  std::vector<double> num(n, 0.0);
  std::vector<double> den(n, 0.0);
  const auto& k = simd::active();

  for (size_t wi = 0; wi < windows.size(); ++wi) {
    const Window& w = windows[wi].window;
    const Grid3<float>& s = windows[wi].scores;
    if (!(s.dims() == w.size)) {
      throw ValidationError("window " + std::to_string(wi) + " scores have dims " + to_string(s.dims()) +
                            ", expected " + to_string(w.size));
    }
    if (!w.size.positive() || w.start.x < 0 || w.start.y < 0 || w.start.z < 0 ||
        w.start.x + w.size.x > volume.x || w.start.y + w.size.y > volume.y ||
        w.start.z + w.size.z > volume.z) {
      throw ValidationError("window " + std::to_string(wi) + " at " + to_string(w.start) +
                            " does not fit volume " + to_string(volume));
    }
    for (float v : s.values()) {
      if (!(v >= 0.0f && v <= 1.0f)) {
        throw ValidationError("window " + std::to_string(wi) + " has scores outside [0, 1]");
      }
    }
    const auto wx = gaussian_profile(w.size.x, cfg.sigma_fraction);
    const auto wy = gaussian_profile(w.size.y, cfg.sigma_fraction);
    const auto wz = gaussian_profile(w.size.z, cfg.sigma_fraction);
    for (int64_t z = 0; z < w.size.z; ++z) {
      for (int64_t y = 0; y < w.size.y; ++y) {
        const size_t base = static_cast<size_t>(w.start.x + volume.x * ((w.start.y + y) + volume.y * (w.start.z + z)));
        k.weighted_accumulate(num.data() + base, den.data() + base, s.row(y, z).data(), wx.data(),
                              wy[static_cast<size_t>(y)] * wz[static_cast<size_t>(z)], kFusionWeightFloor,
                              static_cast<size_t>(w.size.x));
      }
    }
  }

  for (size_t i = 0; i < n; ++i) {
    if (den[i] <= 0.0) {
      const int64_t x = static_cast<int64_t>(i) % volume.x;
      const int64_t y = (static_cast<int64_t>(i) / volume.x) % volume.y;
      const int64_t z = static_cast<int64_t>(i) / (volume.x * volume.y);
      throw ValidationError("voxel " + to_string({x, y, z}) + " is not covered by any window");
    }
  }
  ScoreMap out(volume, 0.0f);
  k.divide(num.data(), den.data(), out.values().data(), n);
  k.clamp01(out.values().data(), n);
  return out;
}

ScoreMap ensemble_mean(std::span<const ScoreMap> maps) {
  if (maps.empty()) throw ValidationError("ensemble_mean needs at least one score map");
  const Dims3 d = maps[0].dims();
  for (const auto& m : maps) {
    if (!(m.dims() == d)) throw ValidationError("ensemble members have mismatched dims");
  }
  if (maps.size() == 1) return maps[0];
  ScoreMap out(d, 0.0f);
  std::vector<float> vals(maps.size());
  const double count = static_cast<double>(maps.size());
  for (size_t i = 0; i < out.size(); ++i) {
    for (size_t m = 0; m < maps.size(); ++m) vals[m] = maps[m].values()[i];
    std::sort(vals.begin(), vals.end());
    double sum = 0.0;
    for (float v : vals) sum += v;
    out.values()[i] = static_cast<float>(sum / count);
  }
  return out;
}

double sample_score(const Grid3<float>& map) {
  const auto v = map.values();
  if (v.empty()) return 0.0;
  std::vector<float> top(v.begin(), v.end());
  const size_t k = std::min<size_t>(static_cast<size_t>(kSampleTopK), top.size());
  std::nth_element(top.begin(), top.begin() + static_cast<std::ptrdiff_t>(k - 1), top.end(),
                   std::greater<float>());
  std::sort(top.begin(), top.begin() + static_cast<std::ptrdiff_t>(k), std::greater<float>());
  double sum = 0.0;
  for (size_t i = 0; i < k; ++i) sum += top[i];
  return sum / static_cast<double>(k);
}

ScoreMap baseline_gradient_scorer(const Grid3<float>& x) {
  const Dims3& d = x.dims();
  ScoreMap out(d, 0.0f);
  if (d.count() == 0) return out;
  const auto& k = simd::active();
  const size_t nx = static_cast<size_t>(d.x);
  std::vector<float> gx(nx), gy(nx), gz(nx);
  for (int64_t z = 0; z < d.z; ++z) {
    const int64_t z0 = std::max<int64_t>(z - 1, 0), z1 = std::min(z + 1, d.z - 1);
    for (int64_t y = 0; y < d.y; ++y) {
      const int64_t y0 = std::max<int64_t>(y - 1, 0), y1 = std::min(y + 1, d.y - 1);
      const auto row = x.row(y, z);
      const auto ym = x.row(y0, z), yp = x.row(y1, z);
      const auto zm = x.row(y, z0), zp = x.row(y, z1);
      for (size_t i = 0; i < nx; ++i) {
        const size_t i0 = i == 0 ? 0 : i - 1;
        const size_t i1 = i + 1 == nx ? i : i + 1;
        gx[i] = (row[i1] - row[i0]) * 0.5f;
        gy[i] = (yp[i] - ym[i]) * 0.5f;
        gz[i] = (zp[i] - zm[i]) * 0.5f;
      }
      k.magnitude3(gx.data(), gy.data(), gz.data(), out.row(y, z).data(), nx);
    }
  }
  float lo = std::numeric_limits<float>::infinity();
  float hi = -std::numeric_limits<float>::infinity();
  k.minmax(out.values().data(), out.size(), &lo, &hi);
  if (!(hi > lo)) {
    std::fill(out.values().begin(), out.values().end(), 0.0f);
    return out;
  }
  k.normalize(out.values().data(), out.values().data(), out.size(), lo, hi - lo);
  k.clamp01(out.values().data(), out.size());
  return out;
}

ScoreMap sliding_window_score(const Volume3D& x, const FusionConfig& cfg, const PatchScorer& scorer,
                              int workers) {
  const auto windows = plan_windows(x.dims(), cfg);
  std::vector<WindowScore> scored(windows.size());
  parallel_for(static_cast<int64_t>(windows.size()), workers, [&](int64_t i) {
    const Window& w = windows[static_cast<size_t>(i)];
    Grid3<float> crop(w.size, 0.0f);
    for (int64_t z = 0; z < w.size.z; ++z)
      for (int64_t y = 0; y < w.size.y; ++y) {
        const auto src = x.grid().row(w.start.y + y, w.start.z + z).subspan(static_cast<size_t>(w.start.x),
                                                                            static_cast<size_t>(w.size.x));
        std::copy(src.begin(), src.end(), crop.row(y, z).begin());
      }
    scored[static_cast<size_t>(i)] = {w, scorer(crop)};
  });
  return fuse_scores(x.dims(), scored, cfg);
}

void write_window_score(const fs::path& dir, const std::string& id, const WindowScore& ws, Dims3 volume_dims) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const std::string patch = id + ".rvol";
  write_volume(Volume3D(ws.scores), dir / patch);
  json j;
  j["start"] = {ws.window.start.x, ws.window.start.y, ws.window.start.z};
  j["size"] = {ws.window.size.x, ws.window.size.y, ws.window.size.z};
  j["volume_dims"] = {volume_dims.x, volume_dims.y, volume_dims.z};
  j["patch"] = patch;
  std::ofstream out(dir / (id + ".window.json"), std::ios::trunc);
  if (!out) throw IoError("cannot write window file for " + id);
  out << j.dump() << '\n';
}

WindowSet read_window_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("window directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.size() > 12 && name.ends_with(".window.json")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no *.window.json files in " + dir.string());

  WindowSet set;
  std::vector<std::string> problems;
  auto dims3 = [](const json& a) {
    return Dims3{a.at(0).get<int64_t>(), a.at(1).get<int64_t>(), a.at(2).get<int64_t>()};
  };
  for (const auto& f : files) {
    try {
      std::ifstream in(f);
      const json j = json::parse(in);
      WindowScore ws;
      ws.window.start = dims3(j.at("start"));
      ws.window.size = dims3(j.at("size"));
      const std::string stem = f.filename().string().substr(0, f.filename().string().size() - 12);
      const std::string patch = j.contains("patch") ? j.at("patch").get<std::string>() : stem + ".rvol";
      const Volume3D v = read_volume(dir / patch);
      ws.scores = v.grid();
      if (j.contains("volume_dims")) {
        const Dims3 vd = dims3(j.at("volume_dims"));
        if (set.volume_dims.positive() && !(set.volume_dims == vd)) {
          throw LoadError("volume_dims disagree with earlier windows");
        }
        set.volume_dims = vd;
      }
      set.windows.push_back(std::move(ws));
    } catch (const nlohmann::json::exception& e) {
      problems.push_back(f.filename().string() + ": " + e.what());
    } catch (const Error& e) {
      problems.push_back(f.filename().string() + ": " + e.what());
    }
  }
  if (!problems.empty()) {
    std::string msg = "failed to read " + std::to_string(problems.size()) + " window file(s):";
    for (const auto& p : problems) msg += "\n  " + p;
    throw IoError(msg);
  }
  if (!set.volume_dims.positive()) {
    Dims3 d{};
    for (const auto& w : set.windows) {
      d.x = std::max(d.x, w.window.start.x + w.window.size.x);
      d.y = std::max(d.y, w.window.start.y + w.window.size.y);
      d.z = std::max(d.z, w.window.start.z + w.window.size.z);
    }
    set.volume_dims = d;
  }
  return set;
}

}  // namespace voxanom
