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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace voxanom {

// Error hierarchy. ValidationError signals a violated precondition or a bad
// configuration value; everything else is a runtime failure.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed volume payload or sidecar.
class LoadError : public IoError {
 public:
  using IoError::IoError;
};

// A randomized generator could not produce a valid result within its retry budget.
class GenerationError : public Error {
 public:
  using Error::Error;
};

struct Dims3 {
  int64_t x = 0;
  int64_t y = 0;
  int64_t z = 0;

  [[nodiscard]] constexpr int64_t count() const { return x * y * z; }
  [[nodiscard]] constexpr int64_t min() const {
    return x < y ? (x < z ? x : z) : (y < z ? y : z);
  }
  [[nodiscard]] constexpr bool positive() const { return x > 0 && y > 0 && z > 0; }
  [[nodiscard]] constexpr int64_t operator[](int axis) const {
    return axis == 0 ? x : (axis == 1 ? y : z);
  }
  [[nodiscard]] std::array<int64_t, 3> array() const { return {x, y, z}; }

  friend constexpr bool operator==(const Dims3&, const Dims3&) = default;

  static constexpr Dims3 cube(int64_t n) { return {n, n, n}; }
};

// Componentwise a < b.
constexpr bool strictly_smaller(const Dims3& a, const Dims3& b) {
  return a.x < b.x && a.y < b.y && a.z < b.z;
}

std::string to_string(const Dims3& d);

using Index3 = Dims3;

// Dense 3D grid, x fastest, then y, then z.
template <class T>
class Grid3 {
 public:
  Grid3() = default;
  explicit Grid3(Dims3 dims, T fill = T{}) : dims_(dims) {
    if (dims.x < 0 || dims.y < 0 || dims.z < 0) {
      throw ValidationError("negative grid dims " + to_string(dims));
    }
    data_.assign(static_cast<size_t>(dims.count()), fill);
  }
  Grid3(Dims3 dims, std::vector<T> data) : dims_(dims), data_(std::move(data)) {
    if (static_cast<int64_t>(data_.size()) != dims.count()) {
      throw ValidationError("grid data length " + std::to_string(data_.size()) +
                            " does not match dims " + to_string(dims));
    }
  }

  [[nodiscard]] const Dims3& dims() const { return dims_; }
  [[nodiscard]] size_t size() const { return data_.size(); }

  [[nodiscard]] size_t index(int64_t x, int64_t y, int64_t z) const {
    return static_cast<size_t>(x + dims_.x * (y + dims_.y * z));
  }
  [[nodiscard]] bool contains(int64_t x, int64_t y, int64_t z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < dims_.x && y < dims_.y && z < dims_.z;
  }

  T& at(int64_t x, int64_t y, int64_t z) { return data_[index(x, y, z)]; }
  [[nodiscard]] const T& at(int64_t x, int64_t y, int64_t z) const {
    return data_[index(x, y, z)];
  }

  // Contiguous x-row starting at (0, y, z).
  std::span<T> row(int64_t y, int64_t z) {
    return {data_.data() + index(0, y, z), static_cast<size_t>(dims_.x)};
  }
  [[nodiscard]] std::span<const T> row(int64_t y, int64_t z) const {
    return {data_.data() + index(0, y, z), static_cast<size_t>(dims_.x)};
  }

  std::span<T> values() { return data_; }
  [[nodiscard]] std::span<const T> values() const { return data_; }
  std::vector<T>& storage() { return data_; }
  [[nodiscard]] const std::vector<T>& storage() const { return data_; }

  friend bool operator==(const Grid3&, const Grid3&) = default;

 private:
  Dims3 dims_{};
  std::vector<T> data_;
};

}  // namespace voxanom
