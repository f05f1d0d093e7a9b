#pragma once

// Batch orchestration behind the command-line tool: one JSON config drives
// input, the three cascade parts, reporting and evaluation.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "octcascade/cascade.hpp"
#include "octcascade/config.hpp"
#include "octcascade/enface.hpp"
#include "octcascade/io.hpp"
#include "octcascade/layer_seg.hpp"
#include "octcascade/metrics.hpp"
#include "octcascade/phantom.hpp"

namespace octcascade {

/// Pipeline stage, used to name failures. The value is the process exit code.
enum class Stage : int {
  Config = 2,
  Input = 3,
  BoundarySource = 4,
  ShadowSource = 5,
  VesselBackend = 6,
  Infusion = 7,
  Evaluation = 8,
  Output = 9,
};

inline const char* stage_name(Stage s) {
  switch (s) {
    case Stage::Config: return "config";
    case Stage::Input: return "input";
    case Stage::BoundarySource: return "boundary source";
    case Stage::ShadowSource: return "shadow source";
    case Stage::VesselBackend: return "vessel backend";
    case Stage::Infusion: return "infusion";
    case Stage::Evaluation: return "evaluation";
    case Stage::Output: return "output";
  }
  return "?";
}

class StageError : public Error {
public:
  StageError(Stage stage, const std::string& what)
      : Error(std::string(stage_name(stage)) + ": " + what), stage_(stage) {}
  Stage stage() const noexcept { return stage_; }
  int exit_code() const noexcept { return static_cast<int>(stage_); }

private:
  Stage stage_;
};

/// Runs fn, rethrowing any library error as a StageError for `stage`.
template <typename Fn>
auto in_stage(Stage stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

/// The four ablation variants: neither prior, #1 only, #2 only, both.
struct Variant {
  const char* name;
  bool longitudinal;
  bool transverse;
};

inline constexpr std::array<Variant, 4> kVariants{{
    {"base", false, false},
    {"+1", true, false},
    {"+2", false, true},
    {"+1+2", true, true},
}};

inline std::optional<Variant> parse_variant(const std::string& s) {
  for (const auto& v : kVariants) {
    if (s == v.name) return v;
  }
  return std::nullopt;
}

struct PipelineConfig {
  // Input: exactly one of a phantom recipe or a volume file.
  std::optional<PhantomConfig> phantom;
  std::filesystem::path volume_path;
  std::filesystem::path ground_truth_path;  // vessel mask, optional for volume input

  std::optional<std::filesystem::path> boundaries_import;
  DpConfig dp = default_dp_config();
  std::optional<std::filesystem::path> shadows_import;
  ShadowConfig shadow{};
  VesselBackendConfig backend{};
  InfusionConfig infusion{};

  std::filesystem::path output_dir = "out";
  bool overlays = true;
  bool montage = true;
  std::vector<Variant> variants{kVariants.begin(), kVariants.end()};
};

namespace detail {

/// Reads {"source": "classical"|"import", "path": ..., <params_key>: {...}}.
/// Returns the import path when the source is "import".
inline std::optional<std::filesystem::path> read_source(const json& j, Stage stage,
                                                        const char* params_key, json& params) {
  const std::string where = stage_name(stage);
  require_object(j, where, {"source", "path", params_key});
  std::string source = "classical";
  read_key(j, "source", source, where);
  std::string path;
  read_key(j, "path", path, where);
  if (auto it = j.find(params_key); it != j.end()) params = *it;
  if (source == "classical") {
    if (!path.empty()) {
      throw StageError(stage, "classical source takes no path; set source to \"import\"");
    }
    return std::nullopt;
  }
  if (source != "import") throw StageError(stage, "source must be \"classical\" or \"import\"");
  if (path.empty()) throw StageError(stage, "import source needs a path");
  return std::filesystem::path(path);
}

}  // namespace detail

/// Relative paths inside the config resolve against `base`.
inline PipelineConfig pipeline_config_from_json(const json& j, const std::filesystem::path& base = {}) {
  auto resolve = [&](const std::filesystem::path& p) {
    return p.is_relative() && !base.empty() ? base / p : p;
  };
  PipelineConfig c;
  in_stage(Stage::Config, [&] {
    detail::require_object(j, "pipeline",
                           {"input", "boundaries", "shadows", "backend", "infusion", "output",
                            "report"});
  });

  in_stage(Stage::Input, [&] {
    const json in = j.value("input", json{{"phantom", json::object()}});
    detail::require_object(in, "input", {"phantom", "volume", "ground_truth"});
    const bool has_phantom = in.contains("phantom");
    const bool has_volume = in.contains("volume");
    if (has_phantom == has_volume) {
      throw ConfigError("input needs exactly one of \"phantom\" or \"volume\"");
    }
    if (has_phantom) {
      if (in.contains("ground_truth")) {
        throw ConfigError("phantom input carries its own ground truth");
      }
      c.phantom = phantom_config_from_json(in["phantom"]);
    } else {
      c.volume_path = resolve(in["volume"].get<std::string>());
      if (in.contains("ground_truth")) c.ground_truth_path = resolve(in["ground_truth"].get<std::string>());
    }
  });

  in_stage(Stage::BoundarySource, [&] {
    json params = json::object();
    if (j.contains("boundaries")) {
      c.boundaries_import = detail::read_source(j["boundaries"], Stage::BoundarySource, "dp", params);
    }
    if (c.boundaries_import) c.boundaries_import = resolve(*c.boundaries_import);
    c.dp = dp_config_from_json(params);
  });

  in_stage(Stage::ShadowSource, [&] {
    json params = json::object();
    if (j.contains("shadows")) {
      c.shadows_import = detail::read_source(j["shadows"], Stage::ShadowSource, "params", params);
    }
    if (c.shadows_import) c.shadows_import = resolve(*c.shadows_import);
    c.shadow = shadow_config_from_json(params);
  });

  in_stage(Stage::VesselBackend, [&] {
    c.backend = backend_config_from_json(j.value("backend", json::object()));
    if (!c.backend.import_path.empty()) c.backend.import_path = resolve(c.backend.import_path);
  });

  in_stage(Stage::Infusion, [&] {
    c.infusion = infusion_config_from_json(j.value("infusion", json::object()));
  });

  in_stage(Stage::Config, [&] {
    if (j.contains("output")) c.output_dir = resolve(j["output"].get<std::string>());
    const json report = j.value("report", json::object());
    detail::require_object(report, "report", {"overlays", "montage", "variants"});
    detail::read_key(report, "overlays", c.overlays, "report");
    detail::read_key(report, "montage", c.montage, "report");
    if (report.contains("variants")) {
      c.variants.clear();
      for (const auto& v : report["variants"]) {
        auto parsed = parse_variant(v.get<std::string>());
        if (!parsed) throw ConfigError("report.variants: unknown variant \"" + v.get<std::string>() + "\"");
        c.variants.push_back(*parsed);
      }
    }
  });
  return c;
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  const json j = in_stage(Stage::Config, [&] { return read_json_file(path); });
  return pipeline_config_from_json(j, path.parent_path());
}

inline json to_json(const PipelineConfig& c) {
  json j;
  if (c.phantom) {
    j["input"] = {{"phantom", to_json(*c.phantom)}};
  } else {
    j["input"] = {{"volume", c.volume_path.string()}};
    if (!c.ground_truth_path.empty()) j["input"]["ground_truth"] = c.ground_truth_path.string();
  }
  if (c.boundaries_import) {
    j["boundaries"] = {{"source", "import"}, {"path", c.boundaries_import->string()}};
  } else {
    j["boundaries"] = {{"source", "classical"}, {"dp", to_json(c.dp)}};
  }
  if (c.shadows_import) {
    j["shadows"] = {{"source", "import"}, {"path", c.shadows_import->string()}};
  } else {
    j["shadows"] = {{"source", "classical"}, {"params", to_json(c.shadow)}};
  }
  j["backend"] = to_json(c.backend);
  j["infusion"] = to_json(c.infusion);
  j["output"] = c.output_dir.string();
  json variants = json::array();
  for (const auto& v : c.variants) variants.push_back(v.name);
  j["report"] = {{"overlays", c.overlays}, {"montage", c.montage}, {"variants", variants}};
  return j;
}

// ---- execution ---------------------------------------------------------------

struct LoadedInput {
  OctVolume volume;
  std::optional<VoxelMask> truth;
  std::optional<PhantomGroundTruth> phantom_truth;
};

inline LoadedInput load_input(const PipelineConfig& c, int threads) {
  return in_stage(Stage::Input, [&] {
    if (c.phantom) {
      auto ph = generate(*c.phantom, threads);
      VoxelMask gt = ph.truth.vessel_mask;
      return LoadedInput{std::move(ph.volume), std::move(gt), std::move(ph.truth)};
    }
    LoadedInput in{read_oct_volume(c.volume_path), std::nullopt, std::nullopt};
    if (!c.ground_truth_path.empty()) {
      in.truth = read_voxel_mask(c.ground_truth_path);
      require_same_dims(in.truth->dims(), in.volume.dims(), "ground truth");
    }
    return in;
  });
}

/// Parts I and II and the unmasked vessel score, each failure tagged with its stage.
inline CascadeStages compute_stages(const PipelineConfig& c, const OctVolume& vol, int threads) {
  const Dims& d = vol.dims();
  BoundarySet b = in_stage(Stage::BoundarySource, [&] {
    if (!c.boundaries_import) return segment_boundaries(vol, c.dp, threads);
    if (!std::filesystem::exists(*c.boundaries_import)) {
      throw IoError("boundary file " + c.boundaries_import->string() + " not found");
    }
    auto imported = import_boundaries(*c.boundaries_import, d.height);
    imported.require_matches(d);
    return imported;
  });
  auto [enface, seg] = in_stage(Stage::ShadowSource, [&] {
    EnFaceImage e = project_rpe(vol, b);
    auto s = segment_shadows(e, c.shadow);
    if (c.shadows_import) {
      if (!std::filesystem::exists(detail::container_paths(*c.shadows_import).header)) {
        throw IoError("shadow mask " + c.shadows_import->string() + " not found");
      }
      s.mask = import_shadow_mask(*c.shadows_import);
      require_plane_shape(s.mask.grid(), d, "imported shadow mask");
    }
    return std::pair{std::move(e), std::move(s)};
  });
  auto scores = in_stage(Stage::VesselBackend, [&] {
    if (c.backend.kind == VesselBackendConfig::Kind::Import &&
        !std::filesystem::exists(detail::container_paths(c.backend.import_path).header)) {
      throw IoError("probability map " + c.backend.import_path.string() + " not found");
    }
    return vessel_probability(vol, b, seg.contrast, c.backend, threads);
  });
  return {std::move(b), std::move(enface), std::move(seg.mask), std::move(seg.contrast),
          std::move(scores)};
}

inline InfusionConfig with_variant(InfusionConfig cfg, const Variant& v) {
  cfg.use_longitudinal = v.longitudinal;
  cfg.use_transverse = v.transverse;
  return cfg;
}

/// Grayscale B-scan with predicted vessel voxels drawn at full white and the
/// rest scaled into [0, 200].
inline Grid2<std::uint8_t> overlay_slice(const OctVolume& vol, const VoxelMask& mask, int s) {
  const Dims& d = vol.dims();
  Grid2<std::uint8_t> out(d.height, d.width);
  for (int z = 0; z < d.height; ++z) {
    for (int x = 0; x < d.width; ++x) {
      out(z, x) = mask(s, z, x) ? 255 : static_cast<std::uint8_t>(std::lround(vol(s, z, x) * 200.0));
    }
  }
  return out;
}

/// En-face projection, shadow mask and the depth projection of the final mask,
/// side by side with one-pixel gaps.
inline Grid2<std::uint8_t> montage(const CascadeStages& st, const VoxelMask& mask) {
  const int S = st.enface.slices();
  const int W = st.enface.width();
  Grid2<std::uint8_t> out(S, 3 * W + 2, 128);
  const auto e = to_gray(st.enface.grid());
  const auto m = to_gray(st.shadow_mask);
  const Dims& d = mask.dims();
  for (int s = 0; s < S; ++s) {
    for (int x = 0; x < W; ++x) {
      out(s, x) = e(s, x);
      out(s, W + 1 + x) = m(s, x);
      bool any = false;
      for (int z = 0; z < d.height && !any; ++z) any = mask(s, z, x);
      out(s, 2 * W + 2 + x) = any ? 255 : 0;
    }
  }
  return out;
}

struct VariantMetrics {
  Variant variant;
  MetricsReport report;
};

struct RunSummary {
  CascadeStages stages;
  CascadeResult result;
  std::vector<VariantMetrics> metrics;  // empty without ground truth
};

/// Evaluates each requested variant against `truth`.
inline std::vector<VariantMetrics> evaluate_variants(const CascadeStages& st, const VoxelMask& truth,
                                                     const InfusionConfig& base,
                                                     const std::vector<Variant>& variants) {
  std::vector<VariantMetrics> rows;
  for (const auto& v : variants) {
    auto r = in_stage(Stage::Infusion, [&] { return finish_cascade(st, with_variant(base, v)); });
    auto m = in_stage(Stage::Evaluation, [&] { return evaluate(r.mask, truth, &r.probability); });
    rows.push_back({v, std::move(m)});
  }
  return rows;
}

inline std::string metrics_csv(const std::vector<VariantMetrics>& rows) {
  std::string out = metrics_csv_header();
  for (const auto& r : rows) out += metrics_csv_row(r.variant.name, r.report);
  return out;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  detail::write_bytes(p, text);
}

/// The `run` command: executes the cascade and writes every report artifact.
inline RunSummary run_pipeline(const PipelineConfig& c, int threads) {
  namespace fs = std::filesystem;
  in_stage(Stage::Output, [&] { fs::create_directories(c.output_dir); });
  auto input = load_input(c, threads);
  auto stages = compute_stages(c, input.volume, threads);
  auto result = in_stage(Stage::Infusion, [&] { return finish_cascade(stages, c.infusion); });
  std::vector<VariantMetrics> metrics;
  if (input.truth) metrics = evaluate_variants(stages, *input.truth, c.infusion, c.variants);

  in_stage(Stage::Output, [&] {
    const fs::path& out = c.output_dir;
    write_text(out / "config_used.json", to_json(c).dump(2) + "\n");
    write_volume(result.mask, out / "vessel_mask");
    write_volume(result.probability, out / "probability");
    write_boundaries(stages.boundaries, out / "boundaries.csv");
    write_pgm(to_gray(stages.enface.grid()), out / "enface.pgm");
    write_pgm(to_gray(stages.shadow_mask), out / "shadow_mask.pgm");
    if (c.overlays) {
      fs::create_directories(out / "overlays");
      for (int s = 0; s < input.volume.dims().slices; ++s) {
        char name[32];
        std::snprintf(name, sizeof name, "slice_%04d.pgm", s);
        write_pgm(overlay_slice(input.volume, result.mask, s), out / "overlays" / name);
      }
    }
    if (c.montage) write_pgm(montage(stages, result.mask), out / "montage.pgm");
    if (!metrics.empty()) write_text(out / "metrics.csv", metrics_csv(metrics));
  });
  return {std::move(stages), std::move(result), std::move(metrics)};
}

/// The `phantom gen` artifacts: volume plus gt_* ground truth and the recipe.
inline void write_phantom(const Phantom& ph, const PhantomConfig& cfg, const std::filesystem::path& out) {
  namespace fs = std::filesystem;
  in_stage(Stage::Output, [&] {
    fs::create_directories(out);
    write_volume(ph.volume, out / "volume");
    write_volume(ph.truth.vessel_mask, out / "gt_vessels");
    write_plane(ph.truth.shadow_footprint, out / "gt_shadow");
    write_boundaries(ph.truth.boundaries, out / "gt_boundaries.csv");
    std::string cl = "vessel,slice,depth,column\n";
    for (std::size_t v = 0; v < ph.truth.centerlines.size(); ++v) {
      const auto& axis = ph.truth.centerlines[v];
      for (std::size_t s = 0; s < axis.size(); ++s) {
        cl += std::to_string(v) + "," + std::to_string(s) + "," + detail::format_double(axis[s].depth) +
              "," + detail::format_double(axis[s].column) + "\n";
      }
    }
    write_text(out / "gt_centerlines.csv", cl);
    write_text(out / "phantom.json", to_json(cfg).dump(2) + "\n");
  });
}

// ---- ablation ----------------------------------------------------------------

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
  std::size_t n = 0;
};

inline MeanStd mean_std(const std::vector<double>& v) {
  MeanStd r;
  r.n = v.size();
  if (v.empty()) return r;
  for (double x : v) r.mean += x;
  r.mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  r.std = std::sqrt(ss / static_cast<double>(v.size()));
  return r;
}

struct VariantAggregate {
  Variant variant;
  MeanStd iou, sen, acc, auc;
};

struct AblationResult {
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<VariantMetrics>> per_seed;
  std::array<VariantAggregate, 4> aggregate;
  bool ordering = false;
};

/// base < +1 < +2 < +1+2 on mean IoU, each step at least `min_gap`.
inline bool ablation_ordering_holds(const std::array<VariantAggregate, 4>& a, double min_gap) {
  for (int i = 0; i + 1 < 4; ++i) {
    if (!(a[i + 1].iou.mean - a[i].iou.mean >= min_gap)) return false;
  }
  return true;
}

/// Runs all four variants on the phantom of each seed. Metrics pool voxels
/// within a volume and are averaged over volumes.
inline AblationResult run_ablation(const PipelineConfig& c, const std::vector<std::uint64_t>& seeds,
                                   int threads, double min_gap = 0.01) {
  if (!c.phantom) throw StageError(Stage::Input, "ablation needs a phantom input (ground truth required)");
  if (seeds.empty()) throw StageError(Stage::Config, "ablation needs at least one seed");
  AblationResult res;
  res.seeds = seeds;
  const std::vector<Variant> all(kVariants.begin(), kVariants.end());
  for (auto seed : seeds) {
    PipelineConfig sc = c;
    sc.phantom->seed = seed;
    auto input = load_input(sc, threads);
    auto stages = compute_stages(sc, input.volume, threads);
    res.per_seed.push_back(evaluate_variants(stages, *input.truth, sc.infusion, all));
  }
  for (std::size_t v = 0; v < kVariants.size(); ++v) {
    std::vector<double> iou, sen, acc, auc;
    for (const auto& rows : res.per_seed) {
      const auto& r = rows[v].report;
      iou.push_back(r.iou);
      sen.push_back(r.sen);
      acc.push_back(r.acc);
      if (r.auc) auc.push_back(*r.auc);
    }
    res.aggregate[v] = {kVariants[v], mean_std(iou), mean_std(sen), mean_std(acc), mean_std(auc)};
  }
  res.ordering = ablation_ordering_holds(res.aggregate, min_gap);
  return res;
}

inline std::string ablation_csv(const AblationResult& r) {
  std::string out = "variant,n,iou_mean,iou_std,sen_mean,sen_std,acc_mean,acc_std,auc_mean,auc_std\n";
  for (const auto& a : r.aggregate) {
    auto cell = [](const MeanStd& m) {
      if (m.n == 0) return std::string("NA,NA");
      return format_metric(m.mean) + "," + format_metric(m.std);
    };
    out += std::string(a.variant.name) + "," + std::to_string(a.iou.n) + "," + cell(a.iou) + "," +
           cell(a.sen) + "," + cell(a.acc) + "," + cell(a.auc) + "\n";
  }
  return out;
}

inline std::string ordering_line(const AblationResult& r) {
  return std::string("ORDERING: ") + (r.ordering ? "PASS" : "FAIL");
}

/// Writes ablation.csv, per-seed metrics and a short text report.
inline void write_ablation(const AblationResult& r, const std::filesystem::path& out) {
  namespace fs = std::filesystem;
  in_stage(Stage::Output, [&] {
    fs::create_directories(out);
    for (std::size_t i = 0; i < r.seeds.size(); ++i) {
      const fs::path dir = out / ("seed_" + std::to_string(r.seeds[i]));
      fs::create_directories(dir);
      write_text(dir / "metrics.csv", metrics_csv(r.per_seed[i]));
    }
    write_text(out / "ablation.csv", ablation_csv(r));
    std::string report = "# metrics: voxels pooled per volume, then averaged over " +
                         std::to_string(r.seeds.size()) + " volume(s); std is the population std\n";
    report += "# seeds:";
    for (auto s : r.seeds) report += " " + std::to_string(s);
    report += "\n";
    for (const auto& a : r.aggregate) {
      report += std::string(a.variant.name) + " iou " + format_metric(a.iou.mean) + "\n";
    }
    report += ordering_line(r) + "\n";
    write_text(out / "ablation_report.txt", report);
  });
}

}  // namespace octcascade
