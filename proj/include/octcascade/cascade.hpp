#pragma once

// Part III: knowledge masks, vessel scoring, infusion, binarization and the
// end-to-end cascade driver.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "octcascade/enface.hpp"
#include "octcascade/error.hpp"
#include "octcascade/grid.hpp"
#include "octcascade/io.hpp"
#include "octcascade/layer_seg.hpp"
#include "octcascade/morphology.hpp"
#include "octcascade/parallel.hpp"
#include "octcascade/types.hpp"

namespace octcascade {

struct InfusionConfig {
  bool use_longitudinal = true;  // histology prior: ILM .. INL_LOWER
  bool use_transverse = true;    // imaging prior: RPE shadow footprint
  int transverse_dilation = 1;
  double binarize_threshold = 0.5;
  int min_component_vox = 8;
  int connectivity = 26;

  void validate() const {
    if (!(binarize_threshold > 0.0 && binarize_threshold < 1.0)) {
      throw ConfigError("binarize threshold must lie in (0, 1)");
    }
    if (transverse_dilation < 0) throw ConfigError("transverse dilation must be >= 0");
    if (min_component_vox < 1) throw ConfigError("min_component_vox must be >= 1");
    if (connectivity != 6 && connectivity != 26) throw ConfigError("connectivity must be 6 or 26");
  }
};

struct VesselBackendConfig {
  enum class Kind { Classical, Import };
  Kind kind = Kind::Classical;
  std::filesystem::path import_path;
  double w_intensity = 1.0;
  double w_shadow = 0.0;

  void validate() const {
    if (kind == Kind::Import) {
      if (import_path.empty()) throw ConfigError("import backend needs a probability map path");
      return;
    }
    if (!(w_intensity >= 0.0 && w_shadow >= 0.0)) {
      throw ConfigError("backend weights must be non-negative");
    }
    if (std::abs(w_intensity + w_shadow - 1.0) > 1e-9) {
      throw ConfigError("backend weights must sum to 1");
    }
  }
};

/// Depths ceil(ILM) .. floor(INL_LOWER) of every column.
inline VoxelMask longitudinal_mask(const BoundarySet& b, const Dims& dims) {
  b.require_matches(dims);
  Grid3<std::uint8_t> m(dims, 0);
  for (int s = 0; s < dims.slices; ++s) {
    for (int x = 0; x < dims.width; ++x) {
      const int lo = std::max(0, static_cast<int>(std::ceil(b(Surface::Ilm, s, x))));
      const int hi =
          std::min(dims.height - 1, static_cast<int>(std::floor(b(Surface::InlLower, s, x))));
      for (int z = lo; z <= hi; ++z) m(s, z, x) = 1;
    }
  }
  return VoxelMask(std::move(m));
}

/// Dilates the footprint by a (2d+1)^2 square and extrudes it along depth.
inline VoxelMask transverse_mask(const PixelMask& pm, const Dims& dims, int dilation) {
  require_plane_shape(pm.grid(), dims, "shadow mask");
  const auto grown = dilate_square(pm.grid(), dilation);
  Grid3<std::uint8_t> m(dims, 0);
  for (int s = 0; s < dims.slices; ++s) {
    for (int x = 0; x < dims.width; ++x) {
      if (!grown(s, x)) continue;
      for (int z = 0; z < dims.height; ++z) m(s, z, x) = 1;
    }
  }
  return VoxelMask(std::move(m));
}

struct VesselScores {
  ProbabilityMap3D map;
  /// Set when the intensity range inside the ILM..BM band is empty.
  bool degenerate = false;
};

/// Classical score: w_intensity * I_hat + w_shadow * c_hat, where I_hat is the
/// volume rescaled by the min/max inside the ILM..BM band (clamped to [0,1])
/// and c_hat is the shadow contrast rescaled by its own min/max.
inline VesselScores classical_vessel_scores(const OctVolume& vol, const BoundarySet& b,
                                            const Grid2<float>& contrast,
                                            const VesselBackendConfig& cfg, int threads = 1) {
  cfg.validate();
  const Dims& d = vol.dims();
  b.require_matches(d);
  require_plane_shape(contrast, d, "shadow contrast");

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int s = 0; s < d.slices; ++s) {
    for (int x = 0; x < d.width; ++x) {
      const int z0 = std::max(0, static_cast<int>(std::ceil(b(Surface::Ilm, s, x))));
      const int z1 = std::min(d.height - 1, static_cast<int>(std::floor(b(Surface::Bm, s, x))));
      for (int z = z0; z <= z1; ++z) {
        lo = std::min(lo, double(vol(s, z, x)));
        hi = std::max(hi, double(vol(s, z, x)));
      }
    }
  }
  if (!(hi - lo > 0.0)) return {ProbabilityMap3D(Grid3<float>(d, 0.0f)), true};

  double c_lo = std::numeric_limits<double>::infinity();
  double c_hi = -c_lo;
  for (float c : contrast.values()) {
    c_lo = std::min(c_lo, double(c));
    c_hi = std::max(c_hi, double(c));
  }
  const double c_span = c_hi - c_lo;

  Grid3<float> out(d, 0.0f);
  parallel_for(d.slices, threads, [&](int s) {
    for (int x = 0; x < d.width; ++x) {
      const double c_hat = c_span > 0.0 ? (contrast(s, x) - c_lo) / c_span : 0.0;
      for (int z = 0; z < d.height; ++z) {
        const double i_hat = std::clamp((vol(s, z, x) - lo) / (hi - lo), 0.0, 1.0);
        const double score = cfg.w_intensity * i_hat + cfg.w_shadow * c_hat;
        out(s, z, x) = static_cast<float>(std::clamp(score, 0.0, 1.0));
      }
    }
  });
  return {ProbabilityMap3D(std::move(out)), false};
}

/// Vessel probability from the configured backend. The import backend is
/// the entry point for maps produced by an external (e.g. trained) model.
inline VesselScores vessel_probability(const OctVolume& vol, const BoundarySet& b,
                                       const Grid2<float>& contrast,
                                       const VesselBackendConfig& cfg, int threads = 1) {
  cfg.validate();
  if (cfg.kind == VesselBackendConfig::Kind::Import) {
    auto p = read_probability_map(cfg.import_path);
    require_same_dims(p.dims(), vol.dims(), "imported probability map");
    return {std::move(p), false};
  }
  return classical_vessel_scores(vol, b, contrast, cfg, threads);
}

/// Zeroes every voxel outside any supplied mask; null masks are ignored.
inline ProbabilityMap3D infuse(const ProbabilityMap3D& p, const VoxelMask* longitudinal,
                               const VoxelMask* transverse) {
  if (longitudinal) require_same_dims(longitudinal->dims(), p.dims(), "longitudinal mask");
  if (transverse) require_same_dims(transverse->dims(), p.dims(), "transverse mask");
  Grid3<float> out = p.grid();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if ((longitudinal && !(*longitudinal)[i]) || (transverse && !(*transverse)[i])) out[i] = 0.0f;
  }
  return ProbabilityMap3D(std::move(out));
}

struct BinaryVessels {
  VoxelMask mask;
  std::size_t components = 0;
};

/// Threshold (strictly above), label, and drop undersized components.
inline BinaryVessels binarize_and_label(const ProbabilityMap3D& p, const InfusionConfig& cfg) {
  cfg.validate();
  Grid3<std::uint8_t> raw(p.dims(), 0);
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = p[i] > cfg.binarize_threshold ? 1 : 0;
  const auto lab = label_components_3d(raw, cfg.connectivity);
  const auto min_size = static_cast<std::size_t>(cfg.min_component_vox);
  std::size_t kept = 0;
  for (auto n : lab.sizes) kept += n >= min_size;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const int l = lab.labels[i];
    raw[i] = (l > 0 && lab.sizes[l - 1] >= min_size) ? 1 : 0;
  }
  return {VoxelMask(std::move(raw)), kept};
}

/// Where the boundaries come from: traced here, or supplied.
struct BoundarySource {
  std::optional<BoundarySet> imported;
  DpConfig dp = default_dp_config();
};

/// Where the shadow footprint comes from. The contrast map that feeds the
/// classical backend is always computed with `config`.
struct ShadowSource {
  std::optional<PixelMask> imported;
  ShadowConfig config{};
};

/// Parts I and II plus the unmasked vessel score; shared by every variant.
struct CascadeStages {
  BoundarySet boundaries;
  EnFaceImage enface;
  PixelMask shadow_mask;
  Grid2<float> shadow_contrast;
  VesselScores scores;
};

inline CascadeStages run_stages(const OctVolume& vol, const BoundarySource& bsrc,
                                const ShadowSource& ssrc, const VesselBackendConfig& backend,
                                int threads = 1) {
  const Dims& d = vol.dims();
  BoundarySet b = bsrc.imported ? *bsrc.imported : segment_boundaries(vol, bsrc.dp, threads);
  b.require_matches(d);
  EnFaceImage e = project_rpe(vol, b);
  auto seg = segment_shadows(e, ssrc.config);
  PixelMask mask = ssrc.imported ? *ssrc.imported : seg.mask;
  require_plane_shape(mask.grid(), d, "shadow mask");
  auto scores = vessel_probability(vol, b, seg.contrast, backend, threads);
  return {std::move(b), std::move(e), std::move(mask), std::move(seg.contrast), std::move(scores)};
}

struct CascadeResult {
  VoxelMask mask;
  ProbabilityMap3D probability;  // after infusion
  std::size_t components = 0;
};

/// Part III for one flag combination on precomputed stages.
inline CascadeResult finish_cascade(const CascadeStages& st, const InfusionConfig& cfg) {
  cfg.validate();
  const Dims& d = st.scores.map.dims();
  std::optional<VoxelMask> lm;
  std::optional<VoxelMask> tm;
  if (cfg.use_longitudinal) lm = longitudinal_mask(st.boundaries, d);
  if (cfg.use_transverse) tm = transverse_mask(st.shadow_mask, d, cfg.transverse_dilation);
  auto p = infuse(st.scores.map, lm ? &*lm : nullptr, tm ? &*tm : nullptr);
  auto bin = binarize_and_label(p, cfg);
  return {std::move(bin.mask), std::move(p), bin.components};
}

struct CascadeRun {
  CascadeStages stages;
  CascadeResult result;
};

/// Parts I -> II -> III in order, honoring the two infusion flags.
inline CascadeRun run_cascade(const OctVolume& vol, const BoundarySource& bsrc,
                              const ShadowSource& ssrc, const VesselBackendConfig& backend,
                              const InfusionConfig& infusion, int threads = 1) {
  infusion.validate();
  auto st = run_stages(vol, bsrc, ssrc, backend, threads);
  auto res = finish_cascade(st, infusion);
  return {std::move(st), std::move(res)};
}

}  // namespace octcascade
