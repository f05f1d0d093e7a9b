#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "octcascade/error.hpp"

namespace octcascade {

/// Extent of a volume: B-scans (slices) x depth (height) x columns (width).
struct Dims {
  int slices = 0;
  int height = 0;
  int width = 0;

  std::size_t voxels() const noexcept {
    return static_cast<std::size_t>(slices) * static_cast<std::size_t>(height) *
           static_cast<std::size_t>(width);
  }
  std::size_t columns() const noexcept {
    return static_cast<std::size_t>(slices) * static_cast<std::size_t>(width);
  }
  friend bool operator==(const Dims&, const Dims&) = default;

  std::string str() const {
    return "(" + std::to_string(slices) + ", " + std::to_string(height) + ", " +
           std::to_string(width) + ")";
  }
};

/// Dense slice-major 3D array; linear index ((s * height) + z) * width + x.
template <typename T>
class Grid3 {
public:
  Grid3() = default;
  explicit Grid3(Dims dims, T fill = T{})
      : dims_(dims), data_(checked_size(dims), fill) {}
  Grid3(Dims dims, std::vector<T> data) : dims_(dims), data_(std::move(data)) {
    if (data_.size() != checked_size(dims)) {
      throw ShapeMismatchError("grid payload has " + std::to_string(data_.size()) +
                               " elements, dims " + dims.str() + " need " +
                               std::to_string(dims.voxels()));
    }
  }

  const Dims& dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::size_t index(int s, int z, int x) const noexcept {
    return (static_cast<std::size_t>(s) * static_cast<std::size_t>(dims_.height) +
            static_cast<std::size_t>(z)) *
               static_cast<std::size_t>(dims_.width) +
           static_cast<std::size_t>(x);
  }

  T& operator()(int s, int z, int x) noexcept { return data_[index(s, z, x)]; }
  const T& operator()(int s, int z, int x) const noexcept { return data_[index(s, z, x)]; }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  /// One B-scan as a contiguous height x width block.
  std::span<const T> slice(int s) const noexcept {
    const std::size_t n = static_cast<std::size_t>(dims_.height) * dims_.width;
    return std::span<const T>(data_).subspan(static_cast<std::size_t>(s) * n, n);
  }

  friend bool operator==(const Grid3&, const Grid3&) = default;

private:
  static std::size_t checked_size(const Dims& d) {
    if (d.slices < 0 || d.height < 0 || d.width < 0) {
      throw ValidationError("negative dimension in " + d.str());
    }
    return d.voxels();
  }

  Dims dims_{};
  std::vector<T> data_;
};

/// Dense row-major 2D array. En-face planes use rows = slices, cols = width;
/// per-B-scan cost images use rows = height, cols = width.
template <typename T>
class Grid2 {
public:
  Grid2() = default;
  Grid2(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(checked_size(rows, cols), fill) {}
  Grid2(int rows, int cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != checked_size(rows, cols)) {
      throw ShapeMismatchError("plane payload has " + std::to_string(data_.size()) +
                               " elements, expected " + std::to_string(rows) + "x" +
                               std::to_string(cols));
    }
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(int r, int c) noexcept {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  const T& operator()(int r, int c) const noexcept {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  bool same_shape(const Grid2& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }
  template <typename U>
  bool same_shape(const Grid2<U>& o) const noexcept {
    return rows_ == o.rows() && cols_ == o.cols();
  }

  friend bool operator==(const Grid2&, const Grid2&) = default;

private:
  static std::size_t checked_size(int r, int c) {
    if (r < 0 || c < 0) throw ValidationError("negative plane dimension");
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(c);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

}  // namespace octcascade
