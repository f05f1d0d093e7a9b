#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "octcascade/error.hpp"
#include "octcascade/grid.hpp"

namespace octcascade {

/// Binary dilation by a (2r+1) x (2r+1) square (Chebyshev ball of radius r).
/// Separable: a row pass followed by a column pass.
inline Grid2<std::uint8_t> dilate_square(const Grid2<std::uint8_t>& in, int radius) {
  if (radius < 0) throw ConfigError("dilation radius must be >= 0");
  if (radius == 0) return in;
  const int R = in.rows();
  const int C = in.cols();
  Grid2<std::uint8_t> rows(R, C, 0);
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) {
      if (!in(r, c)) continue;
      for (int k = std::max(0, c - radius); k <= std::min(C - 1, c + radius); ++k) rows(r, k) = 1;
    }
  }
  Grid2<std::uint8_t> out(R, C, 0);
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) {
      if (!rows(r, c)) continue;
      for (int k = std::max(0, r - radius); k <= std::min(R - 1, r + radius); ++k) out(k, c) = 1;
    }
  }
  return out;
}

/// Connected-component labels, numbered 1.. in order of each component's
/// smallest linear index; 0 is background.
struct Labeling {
  std::vector<int> labels;
  std::vector<std::size_t> sizes;  // sizes[k] is the size of label k + 1
};

/// 8-connected labeling of a 2D binary image.
inline Labeling label_components_2d(const Grid2<std::uint8_t>& in) {
  const int R = in.rows();
  const int C = in.cols();
  Labeling out{std::vector<int>(in.size(), 0), {}};
  std::vector<int> stack;
  for (int r0 = 0; r0 < R; ++r0) {
    for (int c0 = 0; c0 < C; ++c0) {
      const std::size_t i0 = static_cast<std::size_t>(r0) * C + c0;
      if (!in[i0] || out.labels[i0]) continue;
      const int label = static_cast<int>(out.sizes.size()) + 1;
      std::size_t size = 0;
      out.labels[i0] = label;
      stack.assign(1, static_cast<int>(i0));
      while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        ++size;
        const int r = i / C;
        const int c = i % C;
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int rr = r + dr;
            const int cc = c + dc;
            if (rr < 0 || rr >= R || cc < 0 || cc >= C) continue;
            const std::size_t j = static_cast<std::size_t>(rr) * C + cc;
            if (in[j] && !out.labels[j]) {
              out.labels[j] = label;
              stack.push_back(static_cast<int>(j));
            }
          }
        }
      }
      out.sizes.push_back(size);
    }
  }
  return out;
}

/// Labeling of a 3D binary grid under 6- or 26-connectivity.
inline Labeling label_components_3d(const Grid3<std::uint8_t>& in, int connectivity) {
  if (connectivity != 6 && connectivity != 26) {
    throw ConfigError("connectivity must be 6 or 26");
  }
  const Dims d = in.dims();
  Labeling out{std::vector<int>(in.size(), 0), {}};
  std::vector<std::size_t> stack;
  for (std::size_t i0 = 0; i0 < in.size(); ++i0) {
    if (!in[i0] || out.labels[i0]) continue;
    const int label = static_cast<int>(out.sizes.size()) + 1;
    std::size_t size = 0;
    out.labels[i0] = label;
    stack.assign(1, i0);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      ++size;
      const int x = static_cast<int>(i % d.width);
      const int z = static_cast<int>((i / d.width) % d.height);
      const int s = static_cast<int>(i / (static_cast<std::size_t>(d.width) * d.height));
      for (int ds = -1; ds <= 1; ++ds) {
        for (int dz = -1; dz <= 1; ++dz) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int manhattan = std::abs(ds) + std::abs(dz) + std::abs(dx);
            if (manhattan == 0 || (connectivity == 6 && manhattan != 1)) continue;
            const int ss = s + ds;
            const int zz = z + dz;
            const int xx = x + dx;
            if (ss < 0 || ss >= d.slices || zz < 0 || zz >= d.height || xx < 0 || xx >= d.width) {
              continue;
            }
            const std::size_t j = in.index(ss, zz, xx);
            if (in[j] && !out.labels[j]) {
              out.labels[j] = label;
              stack.push_back(j);
            }
          }
        }
      }
    }
    out.sizes.push_back(size);
  }
  return out;
}

}  // namespace octcascade
