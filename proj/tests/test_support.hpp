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

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "voxanom/common.hpp"
#include "voxanom/rng.hpp"
#include "voxanom/volume.hpp"

namespace voxanom::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("voxanom_" + name + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Volume3D random_volume(Dims3 d, uint64_t seed) {
  Rng rng(seed);
  Volume3D v(d);
  for (float& x : v.values()) x = static_cast<float>(rng.uniform());
  return v;
}

// Smooth ramp in [0.1, 0.9]; gradients are small everywhere.
inline Volume3D ramp_volume(Dims3 d) {
  Volume3D v(d);
  for (int64_t z = 0; z < d.z; ++z)
    for (int64_t y = 0; y < d.y; ++y)
      for (int64_t x = 0; x < d.x; ++x) {
        const double t = static_cast<double>(x + y + z) / static_cast<double>(d.x + d.y + d.z);
        v.at(x, y, z) = static_cast<float>(0.1 + 0.8 * t);
      }
  return v;
}

// Every file below `dir` mapped to its bytes, keyed by relative path.
inline std::vector<std::pair<std::string, std::string>> tree_bytes(const std::filesystem::path& dir) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    out.emplace_back(std::filesystem::relative(e.path(), dir).string(), slurp(e.path()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace voxanom::testing
