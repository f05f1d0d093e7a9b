#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "octcascade/error.hpp"
#include "octcascade/grid.hpp"
#include "octcascade/parallel.hpp"
#include "octcascade/rng.hpp"
#include "octcascade/types.hpp"

namespace octcascade {

/// Intensity of each anatomical band before shadows and noise.
struct LayerLevels {
  double vitreous = 0.05;
  double inner = 0.45;    // ILM .. INL_LOWER, hosts the vessels
  double middle = 0.20;   // INL_LOWER .. RPE_UPPER
  double rpe = 0.95;      // RPE_UPPER .. BM, must be the brightest
  double choroid = 0.35;  // below BM
  friend bool operator==(const LayerLevels&, const LayerLevels&) = default;
};

struct PhantomConfig {
  Dims dims{32, 192, 160};
  int n_vessels = 4;
  double vessel_radius = 2.0;
  /// Vessel axis depth as a fraction of the ILM -> INL_LOWER band.
  double depth_fraction_lo = 0.3;
  double depth_fraction_hi = 0.7;
  /// Multiplier applied below a vessel on its axis; 1 disables shadows.
  double shadow_attenuation = 0.4;
  double noise_sigma = 0.03;
  /// Speckle grain: std (voxels) of the Gaussian that correlates the noise
  /// within a B-scan. 0 gives independent voxels. Marginal std stays noise_sigma.
  double speckle_grain = 1.0;
  LayerLevels levels{};
  double vessel_level = 0.7;
  std::uint64_t seed = 0;

  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigError("phantom config: " + m); };
    if (dims.slices < 1 || dims.height < OctVolume::kMinHeight || dims.width < OctVolume::kMinWidth) {
      fail("dims " + dims.str() + " below minimum (1, 8, 8)");
    }
    if (n_vessels < 0) fail("n_vessels must be non-negative");
    if (!(vessel_radius >= 0.5)) fail("vessel_radius must be >= 0.5");
    if (!(depth_fraction_lo >= 0.0 && depth_fraction_hi <= 1.0 &&
          depth_fraction_lo <= depth_fraction_hi)) {
      fail("vessel depth fraction range must satisfy 0 <= lo <= hi <= 1");
    }
    if (!(shadow_attenuation > 0.0 && shadow_attenuation <= 1.0)) {
      fail("shadow_attenuation must lie in (0, 1]");
    }
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) fail("noise_sigma must be >= 0");
    if (!(speckle_grain >= 0.0 && speckle_grain <= 8.0)) fail("speckle_grain must lie in [0, 8]");
    const std::array<double, 6> all{levels.vitreous, levels.inner, levels.middle,
                                    levels.rpe,      levels.choroid, vessel_level};
    for (double v : all) {
      if (!(v >= 0.0 && v <= 1.0)) fail("intensity levels must lie in [0, 1]");
    }
    for (double v : {levels.vitreous, levels.inner, levels.middle, levels.choroid}) {
      if (!(levels.rpe > v)) fail("RPE level must be strictly the brightest layer level");
    }
  }

  friend bool operator==(const PhantomConfig&, const PhantomConfig&) = default;
};

enum class PhantomScale { Desk, Paper };

/// Desk: small volume for tests and ablations. Paper: 496 x 384 B-scans.
inline PhantomConfig default_config(PhantomScale scale, int paper_slices = 32) {
  PhantomConfig c;
  if (scale == PhantomScale::Paper) c.dims = Dims{paper_slices, 496, 384};
  return c;
}

struct CenterlineSample {
  double depth = 0.0;
  double column = 0.0;
  friend bool operator==(const CenterlineSample&, const CenterlineSample&) = default;
};

struct PhantomGroundTruth {
  BoundarySet boundaries;
  VoxelMask vessel_mask;
  PixelMask shadow_footprint;
  /// centerlines[v][s] is vessel v's axis in slice s.
  std::vector<std::vector<CenterlineSample>> centerlines;
};

struct Phantom {
  OctVolume volume;
  PhantomGroundTruth truth;
};

namespace detail {

/// Smooth field in [-1, 1]: normalized sum of three low-frequency plane waves.
class Undulation {
public:
  Undulation(std::uint64_t key, int slices, int width) : slices_(slices), width_(width) {
    SequentialRng rng(key);
    double total = 0.0;
    for (auto& w : waves_) {
      w.amplitude = rng.uniform(0.4, 1.0);
      w.fx = rng.uniform(0.3, 1.2);
      w.fs = rng.uniform(-0.6, 0.6);
      w.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      total += w.amplitude;
    }
    for (auto& w : waves_) w.amplitude /= total;
  }

  double operator()(int s, double x) const {
    double v = 0.0;
    for (const auto& w : waves_) {
      v += w.amplitude * std::sin(2.0 * std::numbers::pi *
                                      (w.fx * x / width_ + w.fs * s / std::max(slices_, 1)) +
                                  w.phase);
    }
    return v;
  }

private:
  struct Wave {
    double amplitude, fx, fs, phase;
  };
  std::array<Wave, 3> waves_{};
  int slices_;
  int width_;
};

inline double lerp_column(const Grid2<double>& g, int s, double x) {
  const int x0 = std::clamp(static_cast<int>(std::floor(x)), 0, g.cols() - 1);
  const int x1 = std::min(x0 + 1, g.cols() - 1);
  const double t = std::clamp(x - x0, 0.0, 1.0);
  return (1.0 - t) * g(s, x0) + t * g(s, x1);
}

inline std::vector<double> gaussian_taps(double sigma) {
  if (sigma <= 0.0) return {1.0};
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * r + 1);
  double sq = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
    sq += k[i + r] * k[i + r];
  }
  // Unit L2 norm keeps the variance of filtered white noise at one.
  for (auto& v : k) v /= std::sqrt(sq);
  return k;
}

/// Unit-variance noise for one B-scan, correlated within the slice by a
/// Gaussian of std `grain`. White noise is drawn on a padded grid keyed by
/// (slice, padded row, padded column).
inline std::vector<double> speckle_slice(const CounterRng& rng, int s, const Dims& d,
                                         double grain) {
  const auto k = gaussian_taps(grain);
  const int r = static_cast<int>(k.size() / 2);
  const int ph = d.height + 2 * r;
  const int pw = d.width + 2 * r;
  const std::uint64_t base = static_cast<std::uint64_t>(s) * ph * pw;
  std::vector<double> white(static_cast<std::size_t>(ph) * pw);
  for (std::size_t i = 0; i < white.size(); ++i) white[i] = rng.normal(base + i);
  if (r == 0) return white;

  std::vector<double> rows(static_cast<std::size_t>(ph) * d.width, 0.0);
  for (int z = 0; z < ph; ++z) {
    for (int x = 0; x < d.width; ++x) {
      double acc = 0.0;
      for (int t = 0; t <= 2 * r; ++t) acc += k[t] * white[static_cast<std::size_t>(z) * pw + x + t];
      rows[static_cast<std::size_t>(z) * d.width + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(d.height) * d.width, 0.0);
  for (int z = 0; z < d.height; ++z) {
    for (int x = 0; x < d.width; ++x) {
      double acc = 0.0;
      for (int t = 0; t <= 2 * r; ++t) acc += k[t] * rows[static_cast<std::size_t>(z + t) * d.width + x];
      out[static_cast<std::size_t>(z) * d.width + x] = acc;
    }
  }
  return out;
}

struct VesselPath {
  std::vector<CenterlineSample> axis;  // one per slice
};

}  // namespace detail

/// Renders a seeded phantom and its ground truth.
///
/// Surfaces, vessel paths and noise each draw from their own stream. Noise is
/// counter-based per slice, so the result is bit-identical for any `threads`.
inline Phantom generate(const PhantomConfig& cfg, int threads = 1) {
  cfg.validate();
  const Dims d = cfg.dims;
  const double H = d.height;

  // Layer geometry scales with the B-scan height.
  const double ilm_mean = 0.20 * H;
  const double ilm_amp = 0.025 * H;
  const double inner_thick = 0.18 * H;
  const double middle_thick = 0.26 * H;
  const double rpe_thick = std::max(3.0, 0.035 * H);
  const double thick_var = 0.10;

  if (ilm_mean - ilm_amp < 1.0 || inner_thick * (1 - thick_var) < 2.0 ||
      middle_thick * (1 - thick_var) < 2.0 || rpe_thick * (1 - thick_var) < 2.0 ||
      ilm_mean + ilm_amp + (inner_thick + middle_thick + rpe_thick) * (1 + thick_var) > H - 2.0) {
    throw ConfigError("phantom config: height " + std::to_string(d.height) +
                      " cannot host four ordered surfaces with 2-voxel bands");
  }

  const detail::Undulation u_ilm(stream_key(cfg.seed, Stream::Surfaces, 0), d.slices, d.width);
  const detail::Undulation u_inner(stream_key(cfg.seed, Stream::Surfaces, 1), d.slices, d.width);
  const detail::Undulation u_middle(stream_key(cfg.seed, Stream::Surfaces, 2), d.slices, d.width);
  const detail::Undulation u_rpe(stream_key(cfg.seed, Stream::Surfaces, 3), d.slices, d.width);

  BoundarySet::Surfaces planes;
  for (auto& p : planes) p = Grid2<double>(d.slices, d.width, 0.0);
  double thinnest_band = H;
  for (int s = 0; s < d.slices; ++s) {
    for (int x = 0; x < d.width; ++x) {
      const double ilm = ilm_mean + ilm_amp * u_ilm(s, x);
      const double inl = ilm + inner_thick * (1.0 + thick_var * u_inner(s, x));
      const double rpe = inl + middle_thick * (1.0 + thick_var * u_middle(s, x));
      const double bm = rpe + rpe_thick * (1.0 + thick_var * u_rpe(s, x));
      planes[0](s, x) = ilm;
      planes[1](s, x) = inl;
      planes[2](s, x) = rpe;
      planes[3](s, x) = bm;
      thinnest_band = std::min(thinnest_band, inl - ilm);
    }
  }
  BoundarySet boundaries(planes, d.height);

  const double R = cfg.vessel_radius;
  if (cfg.n_vessels > 0 && thinnest_band < 2.0 * R + 1.0) {
    throw ConfigError("phantom config: ILM-INL band (" + std::to_string(thinnest_band) +
                      " voxels) too thin for vessel radius " + std::to_string(R));
  }

  std::vector<detail::VesselPath> vessels(cfg.n_vessels);
  const double x_lo = R + 1.0;
  const double x_hi = d.width - R - 2.0;
  for (int k = 0; k < cfg.n_vessels; ++k) {
    SequentialRng rng(stream_key(cfg.seed, Stream::Vessels, static_cast<std::uint64_t>(k)));
    const double x0 = rng.uniform(0.12 * d.width, 0.88 * d.width);
    const double slope = rng.uniform(-0.5, 0.5);
    const double wobble = rng.uniform(0.0, 0.04 * d.width);
    const double period = rng.uniform(0.5, 2.0) * std::max(d.slices, 2);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double frac = rng.uniform(cfg.depth_fraction_lo, cfg.depth_fraction_hi);
    auto& axis = vessels[k].axis;
    axis.resize(d.slices);
    for (int s = 0; s < d.slices; ++s) {
      double xc = x0 + slope * (s - 0.5 * d.slices) +
                  wobble * std::sin(2.0 * std::numbers::pi * s / period + phase);
      xc = std::clamp(xc, x_lo, std::max(x_lo, x_hi));
      const double ilm = detail::lerp_column(boundaries.surface(Surface::Ilm), s, xc);
      const double inl = detail::lerp_column(boundaries.surface(Surface::InlLower), s, xc);
      // Keep the disk inside the band even near its edges.
      const double lo = ilm + R;
      const double hi = std::max(lo, inl - R);
      axis[s] = CenterlineSample{lo + frac * (hi - lo), xc};
    }
  }

  Grid3<float> image(d);
  Grid3<std::uint8_t> vessel_mask(d, 0);
  Grid2<std::uint8_t> footprint(d.slices, d.width, 0);
  const CounterRng noise(stream_key(cfg.seed, Stream::Noise));
  const auto& L = cfg.levels;

  parallel_for(d.slices, threads, [&](int s) {
    std::vector<double> column(d.height);
    std::vector<std::uint8_t> in_vessel(d.height);
    std::vector<double> clean(static_cast<std::size_t>(d.height) * d.width);
    for (int x = 0; x < d.width; ++x) {
      const double ilm = boundaries(Surface::Ilm, s, x);
      const double inl = boundaries(Surface::InlLower, s, x);
      const double rpe = boundaries(Surface::RpeUpper, s, x);
      const double bm = boundaries(Surface::Bm, s, x);
      for (int z = 0; z < d.height; ++z) {
        double v;
        if (z < ilm) v = L.vitreous;
        else if (z <= inl) v = L.inner;
        else if (z < rpe) v = L.middle;
        else if (z <= bm) v = L.rpe;
        else v = L.choroid;
        column[z] = v;
        in_vessel[z] = 0;
      }

      // Vessel interiors first, then each vessel's shadow below its bottom.
      struct Hit {
        int bottom;
        double r;
      };
      std::vector<Hit> hits;
      for (const auto& vp : vessels) {
        const auto c = vp.axis[s];
        const double dx = x - c.column;
        if (std::abs(dx) > R) continue;
        const double half = std::sqrt(R * R - dx * dx);
        const int z_lo = std::max(static_cast<int>(std::ceil(std::max(c.depth - half, ilm))), 0);
        const int z_hi =
            std::min(static_cast<int>(std::floor(std::min(c.depth + half, inl))), d.height - 1);
        if (z_lo > z_hi) continue;
        for (int z = z_lo; z <= z_hi; ++z) {
          in_vessel[z] = 1;
          column[z] = cfg.vessel_level;
        }
        hits.push_back({z_hi, std::abs(dx)});
      }
      for (const auto& h : hits) {
        const double rel = h.r / (R + 0.5);
        const double strength = std::sqrt(std::max(0.0, 1.0 - rel * rel));
        const double f = 1.0 - (1.0 - cfg.shadow_attenuation) * strength;
        for (int z = h.bottom + 1; z < d.height; ++z) {
          if (!in_vessel[z]) column[z] *= f;
        }
      }

      bool any = false;
      for (int z = 0; z < d.height; ++z) {
        const std::size_t i = image.index(s, z, x);
        clean[static_cast<std::size_t>(z) * d.width + x] = column[z];
        vessel_mask[i] = in_vessel[z];
        any = any || in_vessel[z];
      }
      footprint(s, x) = any ? 1 : 0;
    }

    std::vector<double> speckle;
    if (cfg.noise_sigma > 0.0) speckle = detail::speckle_slice(noise, s, d, cfg.speckle_grain);
    for (int z = 0; z < d.height; ++z) {
      for (int x = 0; x < d.width; ++x) {
        const std::size_t k = static_cast<std::size_t>(z) * d.width + x;
        double v = clean[k];
        if (!speckle.empty()) v += cfg.noise_sigma * speckle[k];
        image(s, z, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  });

  std::vector<std::vector<CenterlineSample>> centerlines;
  centerlines.reserve(vessels.size());
  for (auto& vp : vessels) centerlines.push_back(std::move(vp.axis));

  return Phantom{OctVolume(std::move(image)),
                 PhantomGroundTruth{std::move(boundaries), VoxelMask(std::move(vessel_mask)),
                                    PixelMask(std::move(footprint)), std::move(centerlines)}};
}

}  // namespace octcascade
