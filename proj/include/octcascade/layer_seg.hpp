#pragma once

// Classical retinal-layer segmentation: per-B-scan minimum-cost paths with a
// linear jump penalty, traced one surface at a time inside bands derived from
// the surfaces already found.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "octcascade/error.hpp"
#include "octcascade/grid.hpp"
#include "octcascade/io.hpp"
#include "octcascade/parallel.hpp"
#include "octcascade/types.hpp"

namespace octcascade {

/// Per-column inclusive depth range.
struct ColumnBand {
  int lo = 0;
  int hi = 0;
  friend bool operator==(const ColumnBand&, const ColumnBand&) = default;
};

struct PathConstraints {
  double smoothness = 0.5;  // cost per voxel of inter-column depth change
  int max_jump = 2;         // largest allowed inter-column depth change
};

/// Sum of per-column costs plus the jump penalty along `path`.
inline double path_cost(const Grid2<double>& cost, double smoothness, std::span<const int> path) {
  double total = 0.0;
  for (std::size_t x = 0; x < path.size(); ++x) {
    total += cost(path[x], static_cast<int>(x));
    if (x + 1 < path.size()) total += smoothness * std::abs(path[x + 1] - path[x]);
  }
  return total;
}

/// Minimum-cost left-to-right path through a height x width cost image.
///
/// Minimizes sum cost[z(x), x] + smoothness * sum |z(x+1) - z(x)| subject to
/// |z(x+1) - z(x)| <= max_jump and z(x) in band[x]. Among equal-cost paths
/// the lexicographically smallest depth sequence (leftmost column first) wins.
/// Runs a right-to-left value recursion so the forward reconstruction can pick
/// the shallowest optimal depth at each column.
inline std::vector<int> trace_boundary(const Grid2<double>& cost, const PathConstraints& pc,
                                       std::span<const ColumnBand> band) {
  const int H = cost.rows();
  const int W = cost.cols();
  if (W == 0 || H == 0) throw ValidationError("trace_boundary: empty cost image");
  if (static_cast<int>(band.size()) != W) {
    throw ShapeMismatchError("trace_boundary: band has " + std::to_string(band.size()) +
                             " columns, cost has " + std::to_string(W));
  }
  if (!(pc.smoothness >= 0.0)) throw ConfigError("smoothness penalty must be >= 0");
  if (pc.max_jump < 1) throw ConfigError("max_jump must be >= 1");
  for (int x = 0; x < W; ++x) {
    if (band[x].lo > band[x].hi || band[x].lo < 0 || band[x].hi >= H) {
      throw ValidationError("trace_boundary: band [" + std::to_string(band[x].lo) + ", " +
                            std::to_string(band[x].hi) + "] invalid at column " +
                            std::to_string(x));
    }
  }

  constexpr double inf = std::numeric_limits<double>::infinity();
  const int s = pc.max_jump;
  std::vector<double> next(H, inf);
  std::vector<double> cur(H, inf);
  Grid2<int> choice(H, W, -1);

  for (int z = band[W - 1].lo; z <= band[W - 1].hi; ++z) next[z] = cost(z, W - 1);
  for (int x = W - 2; x >= 0; --x) {
    std::fill(cur.begin(), cur.end(), inf);
    bool feasible = false;
    for (int z = band[x].lo; z <= band[x].hi; ++z) {
      const int n_lo = std::max(band[x + 1].lo, z - s);
      const int n_hi = std::min(band[x + 1].hi, z + s);
      double best = inf;
      int arg = -1;
      for (int zn = n_lo; zn <= n_hi; ++zn) {
        const double v = next[zn] + pc.smoothness * std::abs(zn - z);
        if (v < best) {
          best = v;
          arg = zn;
        }
      }
      if (arg >= 0) {
        cur[z] = cost(z, x) + best;
        choice(z, x) = arg;
        feasible = true;
      }
    }
    if (!feasible) {
      throw InfeasibleError("no feasible depth transition into column " + std::to_string(x + 1) +
                                " (bands farther apart than max_jump)",
                            x + 1);
    }
    std::swap(cur, next);
  }

  int z0 = -1;
  double best = inf;
  for (int z = band[0].lo; z <= band[0].hi; ++z) {
    if (next[z] < best) {
      best = next[z];
      z0 = z;
    }
  }
  std::vector<int> path(W);
  path[0] = z0;
  for (int x = 0; x + 1 < W; ++x) path[x + 1] = choice(path[x], x);
  return path;
}

enum class CostKind {
  NegativeVerticalGradient,  // rewards dark -> bright with depth
  PositiveVerticalGradient,  // rewards bright -> dark with depth
  NegativeIntensity,         // rewards bright rows
};

/// What a band limit is measured from. ImageFraction offsets are fractions of
/// (height - 1); surface anchors take offsets in voxels.
enum class Anchor { ImageFraction, Ilm, InlLower, RpeUpper, Bm };

struct BandLimit {
  Anchor anchor = Anchor::ImageFraction;
  double offset = 0.0;
};

struct SearchBand {
  BandLimit lo;
  BandLimit hi;
};

struct BoundaryTraceConfig {
  CostKind cost = CostKind::NegativeVerticalGradient;
  PathConstraints path{};
  SearchBand band{};
};

/// Tracing parameters for the four surfaces, indexed by Surface. Surfaces are
/// traced in the order ILM, RPE_UPPER, BM, INL_LOWER; a band may only anchor
/// to surfaces traced before it.
struct DpConfig {
  std::array<BoundaryTraceConfig, 4> surfaces{};

  BoundaryTraceConfig& operator[](Surface s) { return surfaces[static_cast<int>(s)]; }
  const BoundaryTraceConfig& operator[](Surface s) const { return surfaces[static_cast<int>(s)]; }

  static constexpr std::array<Surface, 4> kTraceOrder{Surface::Ilm, Surface::RpeUpper, Surface::Bm,
                                                      Surface::InlLower};

  void validate() const {
    std::array<bool, 4> done{};
    for (Surface sf : kTraceOrder) {
      const auto& c = (*this)[sf];
      const std::string name(surface_name(sf));
      if (!(c.path.smoothness >= 0.0)) throw ConfigError(name + ": smoothness must be >= 0");
      if (c.path.max_jump < 1) throw ConfigError(name + ": max_jump must be >= 1");
      for (const BandLimit& l : {c.band.lo, c.band.hi}) {
        if (!std::isfinite(l.offset)) throw ConfigError(name + ": band offset not finite");
        if (l.anchor == Anchor::ImageFraction) continue;
        const int a = static_cast<int>(l.anchor) - 1;
        if (!done[a]) {
          throw ConfigError(name + " band anchors to " +
                            std::string(surface_name(static_cast<Surface>(a))) +
                            ", which is traced later");
        }
      }
      if (c.band.lo.anchor == c.band.hi.anchor && c.band.lo.offset > c.band.hi.offset) {
        throw ConfigError(name + ": band is empty");
      }
      done[static_cast<int>(sf)] = true;
    }
  }
};

inline DpConfig default_dp_config() {
  DpConfig c;
  const PathConstraints pc{0.5, 2};
  c[Surface::Ilm] = {CostKind::NegativeVerticalGradient, pc,
                     {{Anchor::ImageFraction, 0.0}, {Anchor::ImageFraction, 0.5}}};
  c[Surface::RpeUpper] = {CostKind::NegativeVerticalGradient, pc,
                          {{Anchor::Ilm, 10.0}, {Anchor::ImageFraction, 1.0}}};
  c[Surface::Bm] = {CostKind::PositiveVerticalGradient, pc,
                    {{Anchor::RpeUpper, 1.0}, {Anchor::RpeUpper, 30.0}}};
  c[Surface::InlLower] = {CostKind::PositiveVerticalGradient, pc,
                          {{Anchor::Ilm, 2.0}, {Anchor::RpeUpper, -2.0}}};
  return c;
}

/// Vertical derivative of one B-scan: central differences inside, one-sided
/// on the first and last rows.
inline Grid2<double> vertical_gradient(const Grid3<float>& v, int slice) {
  const int H = v.dims().height;
  const int W = v.dims().width;
  Grid2<double> g(H, W, 0.0);
  for (int z = 0; z < H; ++z) {
    for (int x = 0; x < W; ++x) {
      double d;
      if (H == 1) d = 0.0;
      else if (z == 0) d = double(v(slice, 1, x)) - v(slice, 0, x);
      else if (z == H - 1) d = double(v(slice, H - 1, x)) - v(slice, H - 2, x);
      else d = 0.5 * (double(v(slice, z + 1, x)) - v(slice, z - 1, x));
      g(z, x) = d;
    }
  }
  return g;
}

namespace detail {

inline Grid2<double> surface_cost(CostKind kind, const Grid2<double>& gradient,
                                  const Grid3<float>& v, int slice) {
  Grid2<double> c(gradient.rows(), gradient.cols());
  for (int z = 0; z < c.rows(); ++z) {
    for (int x = 0; x < c.cols(); ++x) {
      switch (kind) {
        case CostKind::NegativeVerticalGradient: c(z, x) = -gradient(z, x); break;
        case CostKind::PositiveVerticalGradient: c(z, x) = gradient(z, x); break;
        case CostKind::NegativeIntensity: c(z, x) = -static_cast<double>(v(slice, z, x)); break;
      }
    }
  }
  return c;
}

}  // namespace detail

/// Traces all four surfaces on one B-scan. Bands are clamped so that the
/// ordering ILM <= INL_LOWER <= RPE_UPPER <= BM holds by construction.
inline std::array<std::vector<int>, 4> segment_bscan(const OctVolume& vol, int slice,
                                                     const DpConfig& cfg) {
  const Grid3<float>& v = vol.grid();
  const int H = v.dims().height;
  const int W = v.dims().width;
  const Grid2<double> gradient = vertical_gradient(v, slice);
  std::array<std::vector<int>, 4> found;
  std::array<bool, 4> have{};

  auto limit_value = [&](const BandLimit& l, int x) -> double {
    if (l.anchor == Anchor::ImageFraction) return l.offset * (H - 1);
    return found[static_cast<int>(l.anchor) - 1][x] + l.offset;
  };

  for (Surface sf : DpConfig::kTraceOrder) {
    const auto& tc = cfg[sf];
    const int idx = static_cast<int>(sf);
    std::vector<ColumnBand> band(W);
    for (int x = 0; x < W; ++x) {
      // Ordering bounds from surfaces already traced.
      int lb = 0;
      int ub = H - 1;
      for (int o = 0; o < 4; ++o) {
        if (!have[o]) continue;
        if (o < idx) lb = std::max(lb, found[o][x]);
        if (o > idx) ub = std::min(ub, found[o][x]);
      }
      auto clampi = [&](double v) {
        if (!(v > -1e9)) v = -1e9;
        if (!(v < 1e9)) v = 1e9;
        return std::clamp(static_cast<int>(v), lb, ub);
      };
      int lo = clampi(std::ceil(limit_value(tc.band.lo, x) - 1e-9));
      int hi = clampi(std::floor(limit_value(tc.band.hi, x) + 1e-9));
      if (lo > hi) hi = lo;
      band[x] = {lo, hi};
    }
    found[idx] = trace_boundary(detail::surface_cost(tc.cost, gradient, v, slice), tc.path, band);
    have[idx] = true;
  }
  return found;
}

/// Classical Part I: per-slice DP tracing of ILM, RPE_UPPER, BM, INL_LOWER.
inline BoundarySet segment_boundaries(const OctVolume& vol, const DpConfig& cfg = default_dp_config(),
                                      int threads = 1) {
  cfg.validate();
  const Dims& d = vol.dims();
  std::vector<std::array<std::vector<int>, 4>> per_slice(d.slices);
  parallel_for(d.slices, threads, [&](int s) { per_slice[s] = segment_bscan(vol, s, cfg); });
  BoundarySet::Surfaces planes;
  for (auto& p : planes) p = Grid2<double>(d.slices, d.width, 0.0);
  for (int s = 0; s < d.slices; ++s) {
    for (int b = 0; b < 4; ++b) {
      for (int x = 0; x < d.width; ++x) planes[b](s, x) = per_slice[s][b][x];
    }
  }
  return BoundarySet(std::move(planes), d.height);
}

/// Reads boundaries produced elsewhere (e.g. a trained layer segmenter).
inline BoundarySet import_boundaries(const std::filesystem::path& path,
                                     std::optional<int> height = std::nullopt) {
  return read_boundaries(path, height);
}

/// Mean absolute depth difference of one surface between two sets.
inline double mean_abs_surface_error(const BoundarySet& est, const BoundarySet& truth, Surface sf) {
  if (est.slices() != truth.slices() || est.width() != truth.width()) {
    throw ShapeMismatchError("boundary sets differ in shape");
  }
  double sum = 0.0;
  for (int s = 0; s < est.slices(); ++s) {
    for (int x = 0; x < est.width(); ++x) sum += std::abs(est(sf, s, x) - truth(sf, s, x));
  }
  return sum / (static_cast<double>(est.slices()) * est.width());
}

}  // namespace octcascade
