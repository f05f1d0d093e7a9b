#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>

#include "octcascade/error.hpp"
#include "octcascade/grid.hpp"

namespace octcascade {

/// Voxel pitch in micrometers along (slice, depth, column). Informational.
struct Spacing {
  double dy = 1.0;
  double dz = 1.0;
  double dx = 1.0;
  friend bool operator==(const Spacing&, const Spacing&) = default;
};

namespace detail {

inline std::string voxel_name(const Dims& d, std::size_t i) {
  const std::size_t plane = static_cast<std::size_t>(d.height) * d.width;
  const std::size_t s = d.width ? i / plane : 0;
  const std::size_t z = d.width ? (i % plane) / d.width : 0;
  const std::size_t x = d.width ? i % d.width : 0;
  return "(" + std::to_string(s) + ", " + std::to_string(z) + ", " + std::to_string(x) + ")";
}

inline std::string pixel_name(int cols, std::size_t i) {
  return "(" + std::to_string(i / cols) + ", " + std::to_string(i % cols) + ")";
}

template <typename Range>
void require_unit_range(const Range& v, const Dims& d, std::string_view what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = static_cast<double>(v[i]);
    if (!std::isfinite(x) || x < 0.0 || x > 1.0) {
      throw ValidationError(std::string(what) + " value " + std::to_string(x) +
                            " outside [0,1] at voxel " + voxel_name(d, i));
    }
  }
}

template <typename Range>
void require_binary(const Range& v, const Dims& d, std::string_view what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] != 0 && v[i] != 1) {
      throw ValidationError(std::string(what) + " holds non-binary value " +
                            std::to_string(static_cast<int>(v[i])) + " at voxel " +
                            voxel_name(d, i));
    }
  }
}

}  // namespace detail

/// Raw OCT intensities normalized to [0,1].
class OctVolume {
public:
  static constexpr int kMinHeight = 8;
  static constexpr int kMinWidth = 8;

  explicit OctVolume(Grid3<float> data, std::optional<Spacing> spacing = std::nullopt)
      : data_(std::move(data)), spacing_(spacing) {
    const Dims& d = data_.dims();
    if (d.slices < 1 || d.height < kMinHeight || d.width < kMinWidth) {
      throw ValidationError("volume dims " + d.str() +
                            " below minimum (1, 8, 8)");
    }
    detail::require_unit_range(data_.values(), d, "intensity");
  }

  /// Normalizes integer samples by the maximum of their type.
  template <typename Int>
  static OctVolume from_integer(Dims dims, std::span<const Int> raw,
                                std::optional<Spacing> spacing = std::nullopt) {
    static_assert(std::is_integral_v<Int> && std::is_unsigned_v<Int>);
    if (raw.size() != dims.voxels()) {
      throw ShapeMismatchError("raw sample count does not match dims " + dims.str());
    }
    constexpr double top = static_cast<double>(std::numeric_limits<Int>::max());
    Grid3<float> g(dims);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      g[i] = static_cast<float>(static_cast<double>(raw[i]) / top);
    }
    return OctVolume(std::move(g), spacing);
  }

  const Dims& dims() const noexcept { return data_.dims(); }
  const Grid3<float>& grid() const noexcept { return data_; }
  float operator()(int s, int z, int x) const noexcept { return data_(s, z, x); }
  const std::optional<Spacing>& spacing() const noexcept { return spacing_; }

  friend bool operator==(const OctVolume&, const OctVolume&) = default;

private:
  Grid3<float> data_;
  std::optional<Spacing> spacing_;
};

/// Per-voxel vessel scores in [0,1].
class ProbabilityMap3D {
public:
  explicit ProbabilityMap3D(Grid3<float> data) : data_(std::move(data)) {
    detail::require_unit_range(data_.values(), data_.dims(), "probability");
  }
  const Dims& dims() const noexcept { return data_.dims(); }
  const Grid3<float>& grid() const noexcept { return data_; }
  float operator()(int s, int z, int x) const noexcept { return data_(s, z, x); }
  float operator[](std::size_t i) const noexcept { return data_[i]; }

  friend bool operator==(const ProbabilityMap3D&, const ProbabilityMap3D&) = default;

private:
  Grid3<float> data_;
};

/// Binary 3D mask stored as 0/1 bytes.
class VoxelMask {
public:
  explicit VoxelMask(Dims dims) : data_(dims, 0) {}
  explicit VoxelMask(Grid3<std::uint8_t> data) : data_(std::move(data)) {
    detail::require_binary(data_.values(), data_.dims(), "voxel mask");
  }
  const Dims& dims() const noexcept { return data_.dims(); }
  const Grid3<std::uint8_t>& grid() const noexcept { return data_; }
  bool operator()(int s, int z, int x) const noexcept { return data_(s, z, x) != 0; }
  bool operator[](std::size_t i) const noexcept { return data_[i] != 0; }

  std::size_t count() const noexcept {
    std::size_t n = 0;
    for (auto v : data_.values()) n += v;
    return n;
  }

  friend bool operator==(const VoxelMask&, const VoxelMask&) = default;

private:
  Grid3<std::uint8_t> data_;
};

/// 2D (slices x width) en-face intensity image.
class EnFaceImage {
public:
  explicit EnFaceImage(Grid2<float> data) : data_(std::move(data)) {
    detail::require_unit_range(data_.values(), Dims{1, data_.rows(), data_.cols()}, "en-face");
  }
  int slices() const noexcept { return data_.rows(); }
  int width() const noexcept { return data_.cols(); }
  const Grid2<float>& grid() const noexcept { return data_; }
  float operator()(int s, int x) const noexcept { return data_(s, x); }

  friend bool operator==(const EnFaceImage&, const EnFaceImage&) = default;

private:
  Grid2<float> data_;
};

/// 2D (slices x width) binary transverse footprint.
class PixelMask {
public:
  PixelMask(int slices, int width) : data_(slices, width, 0) {}
  explicit PixelMask(Grid2<std::uint8_t> data) : data_(std::move(data)) {
    detail::require_binary(data_.values(), Dims{1, data_.rows(), data_.cols()}, "pixel mask");
  }
  int slices() const noexcept { return data_.rows(); }
  int width() const noexcept { return data_.cols(); }
  const Grid2<std::uint8_t>& grid() const noexcept { return data_; }
  bool operator()(int s, int x) const noexcept { return data_(s, x) != 0; }

  std::size_t count() const noexcept {
    std::size_t n = 0;
    for (auto v : data_.values()) n += v;
    return n;
  }

  friend bool operator==(const PixelMask&, const PixelMask&) = default;

private:
  Grid2<std::uint8_t> data_;
};

enum class Surface : int { Ilm = 0, InlLower = 1, RpeUpper = 2, Bm = 3 };

inline constexpr std::array<Surface, 4> kSurfaces{Surface::Ilm, Surface::InlLower,
                                                   Surface::RpeUpper, Surface::Bm};

inline constexpr std::string_view surface_name(Surface s) noexcept {
  switch (s) {
    case Surface::Ilm: return "ILM";
    case Surface::InlLower: return "INL_LOWER";
    case Surface::RpeUpper: return "RPE_UPPER";
    case Surface::Bm: return "BM";
  }
  return "?";
}

inline std::optional<Surface> parse_surface(std::string_view name) noexcept {
  for (Surface s : kSurfaces) {
    if (surface_name(s) == name) return s;
  }
  return std::nullopt;
}

/// The four retinal surfaces as fractional depth per (slice, column).
///
/// Ordering 0 <= ILM <= INL_LOWER <= RPE_UPPER <= BM <= height - 1 holds at
/// every column; the constructor rejects anything else.
class BoundarySet {
public:
  using Surfaces = std::array<Grid2<double>, 4>;

  BoundarySet(Surfaces surfaces, int height) : surfaces_(std::move(surfaces)), height_(height) {
    const auto& ref = surfaces_[0];
    for (const auto& g : surfaces_) {
      if (!g.same_shape(ref)) {
        throw ShapeMismatchError("boundary surfaces differ in shape");
      }
    }
    for (int s = 0; s < ref.rows(); ++s) {
      for (int x = 0; x < ref.cols(); ++x) {
        double prev = 0.0;
        for (Surface b : kSurfaces) {
          const double v = surfaces_[static_cast<int>(b)](s, x);
          if (!std::isfinite(v) || v < prev) {
            throw ValidationError("boundary ordering violated at (slice " + std::to_string(s) +
                                  ", column " + std::to_string(x) + "): " +
                                  std::string(surface_name(b)) + " = " + std::to_string(v));
          }
          prev = v;
        }
        if (prev > height_ - 1) {
          throw ValidationError("BM below volume floor at (slice " + std::to_string(s) +
                                ", column " + std::to_string(x) + ")");
        }
      }
    }
  }

  int slices() const noexcept { return surfaces_[0].rows(); }
  int width() const noexcept { return surfaces_[0].cols(); }
  int height() const noexcept { return height_; }

  const Grid2<double>& surface(Surface b) const noexcept {
    return surfaces_[static_cast<int>(b)];
  }
  double operator()(Surface b, int s, int x) const noexcept { return surface(b)(s, x); }

  /// Throws unless the set covers the (slices, width) plane of `d` and fits its depth.
  void require_matches(const Dims& d) const {
    if (slices() != d.slices || width() != d.width || height_ > d.height) {
      throw ShapeMismatchError("boundary set (" + std::to_string(slices()) + " x " +
                               std::to_string(width()) + ", height " + std::to_string(height_) +
                               ") does not match volume " + d.str());
    }
  }

  friend bool operator==(const BoundarySet&, const BoundarySet&) = default;

private:
  Surfaces surfaces_;
  int height_;
};

template <typename Plane>
void require_plane_shape(const Plane& p, const Dims& d, std::string_view what) {
  if (p.rows() != d.slices || p.cols() != d.width) {
    throw ShapeMismatchError(std::string(what) + " is " + std::to_string(p.rows()) + " x " +
                             std::to_string(p.cols()) + ", volume " + d.str() + " needs " +
                             std::to_string(d.slices) + " x " + std::to_string(d.width));
  }
}

inline void require_same_dims(const Dims& a, const Dims& b, std::string_view what) {
  if (!(a == b)) {
    throw ShapeMismatchError(std::string(what) + ": dims " + a.str() + " vs " + b.str());
  }
}

}  // namespace octcascade
