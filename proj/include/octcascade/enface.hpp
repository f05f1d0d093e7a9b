#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>

#include "octcascade/error.hpp"
#include "octcascade/grid.hpp"
#include "octcascade/io.hpp"
#include "octcascade/morphology.hpp"
#include "octcascade/types.hpp"

namespace octcascade {

struct ShadowConfig {
  int window_slices = 9;   // box background extent across B-scans
  int window_cols = 15;    // and along the B-scan
  double threshold = 0.15; // relative darkening needed to call a shadow
  int min_component_px = 10;
  int dilation_radius = 0;

  void validate() const {
    auto odd3 = [](int w) { return w >= 3 && w % 2 == 1; };
    if (!odd3(window_slices) || !odd3(window_cols)) {
      throw ConfigError("shadow background window must be odd and >= 3");
    }
    if (!(threshold > 0.0)) throw ConfigError("shadow contrast threshold must be > 0");
    if (min_component_px < 1) throw ConfigError("min_component_px must be >= 1");
    if (dilation_radius < 0) throw ConfigError("shadow dilation radius must be >= 0");
  }
};

/// Mean intensity of the RPE band per A-scan.
///
/// Averages depths ceil(RPE_UPPER) .. floor(BM); when that range is empty the
/// single voxel at round(RPE_UPPER) is used.
inline EnFaceImage project_rpe(const OctVolume& vol, const BoundarySet& b) {
  const Dims& d = vol.dims();
  b.require_matches(d);
  Grid2<float> out(d.slices, d.width, 0.0f);
  for (int s = 0; s < d.slices; ++s) {
    for (int x = 0; x < d.width; ++x) {
      const int lo = std::max(0, static_cast<int>(std::ceil(b(Surface::RpeUpper, s, x))));
      const int hi = std::min(d.height - 1, static_cast<int>(std::floor(b(Surface::Bm, s, x))));
      double sum = 0.0;
      int n = 0;
      for (int z = lo; z <= hi; ++z) {
        sum += vol(s, z, x);
        ++n;
      }
      if (n == 0) {
        const int z = std::clamp(static_cast<int>(std::lround(b(Surface::RpeUpper, s, x))), 0,
                                 d.height - 1);
        sum = vol(s, z, x);
        n = 1;
      }
      out(s, x) = static_cast<float>(std::clamp(sum / n, 0.0, 1.0));
    }
  }
  return EnFaceImage(std::move(out));
}

/// Box mean over a (ws x wx) window with replicated edges.
inline Grid2<double> box_mean(const Grid2<float>& img, int ws, int wx) {
  const int R = img.rows();
  const int C = img.cols();
  const int hs = ws / 2;
  const int hx = wx / 2;
  // Column sums first, then row sums; both with clamped indices.
  Grid2<double> vert(R, C, 0.0);
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) {
      double acc = 0.0;
      for (int k = -hs; k <= hs; ++k) acc += img(std::clamp(r + k, 0, R - 1), c);
      vert(r, c) = acc;
    }
  }
  Grid2<double> out(R, C, 0.0);
  const double norm = 1.0 / (static_cast<double>(ws) * wx);
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) {
      double acc = 0.0;
      for (int k = -hx; k <= hx; ++k) acc += vert(r, std::clamp(c + k, 0, C - 1));
      out(r, c) = acc * norm;
    }
  }
  return out;
}

/// Relative darkening against the local background, in [0, 1].
inline Grid2<float> shadow_contrast(const EnFaceImage& e, const ShadowConfig& cfg) {
  cfg.validate();
  const auto bg = box_mean(e.grid(), cfg.window_slices, cfg.window_cols);
  Grid2<float> c(e.slices(), e.width(), 0.0f);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double v = (bg[i] - e.grid()[i]) / std::max(bg[i], 1e-6);
    c[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return c;
}

/// Pixels with contrast strictly above `threshold`, before size filtering.
inline Grid2<std::uint8_t> threshold_contrast(const Grid2<float>& contrast, double threshold) {
  Grid2<std::uint8_t> m(contrast.rows(), contrast.cols(), 0);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = contrast[i] > threshold ? 1 : 0;
  return m;
}

/// Clears 8-connected components smaller than `min_size` pixels.
inline Grid2<std::uint8_t> remove_small_components(const Grid2<std::uint8_t>& m,
                                                   std::size_t min_size) {
  const auto lab = label_components_2d(m);
  Grid2<std::uint8_t> out(m.rows(), m.cols(), 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int l = lab.labels[i];
    out[i] = (l > 0 && lab.sizes[l - 1] >= min_size) ? 1 : 0;
  }
  return out;
}

struct ShadowSegmentation {
  PixelMask mask;
  Grid2<float> contrast;
};

/// Classical shadow segmentation on the RPE en-face image.
inline ShadowSegmentation segment_shadows(const EnFaceImage& e, const ShadowConfig& cfg = {}) {
  auto contrast = shadow_contrast(e, cfg);
  auto mask = remove_small_components(threshold_contrast(contrast, cfg.threshold),
                                      static_cast<std::size_t>(cfg.min_component_px));
  mask = dilate_square(mask, cfg.dilation_radius);
  return {PixelMask(std::move(mask)), std::move(contrast)};
}

/// Reads a shadow mask produced elsewhere. Shape is checked where it is used.
inline PixelMask import_shadow_mask(const std::filesystem::path& path) {
  return read_pixel_mask(path);
}

}  // namespace octcascade
