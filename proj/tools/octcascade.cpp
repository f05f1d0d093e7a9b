// Command-line front end for the OCT vessel cascade.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "octcascade/pipeline.hpp"

namespace fs = std::filesystem;
using namespace octcascade;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* app, Common& c, bool config_required = false) {
  auto* opt = app->add_option("--config", c.config, "JSON config file");
  if (config_required) opt->required();
  app->add_option("--seed", c.seed, "Phantom seed (overrides the config)");
  app->add_option("--out", c.out, "Output directory");
}

PipelineConfig load_or_default(const Common& c) {
  PipelineConfig cfg;
  if (!c.config.empty()) {
    cfg = load_pipeline_config(c.config);
  } else {
    cfg.phantom = default_config(PhantomScale::Desk);
  }
  if (c.seed) {
    if (!cfg.phantom) throw StageError(Stage::Config, "--seed applies only to phantom input");
    cfg.phantom->seed = *c.seed;
  }
  if (!c.out.empty()) cfg.output_dir = c.out;
  return cfg;
}

/// "0-9", "1,4,7" or a mix such as "0-2,8".
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    try {
      const auto dash = part.find('-');
      if (dash == std::string::npos) {
        out.push_back(std::stoull(part));
        continue;
      }
      const auto lo = std::stoull(part.substr(0, dash));
      const auto hi = std::stoull(part.substr(dash + 1));
      if (hi < lo) throw StageError(Stage::Config, "seed range " + part + " is reversed");
      for (auto s = lo; s <= hi; ++s) out.push_back(s);
    } catch (const std::logic_error&) {
      throw StageError(Stage::Config, "cannot parse seed list \"" + text + "\"");
    }
  }
  if (out.empty()) throw StageError(Stage::Config, "empty seed list");
  return out;
}

fs::path out_dir(const std::string& out) {
  fs::path p = out.empty() ? fs::path(".") : fs::path(out);
  in_stage(Stage::Output, [&] { fs::create_directories(p); });
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-infused vessel segmentation for volumetric OCT"};
  app.require_subcommand(1);
  const int threads = threads_from_env();

  // phantom gen
  auto* phantom = app.add_subcommand("phantom", "Synthetic OCT phantoms");
  phantom->require_subcommand(1);
  auto* gen = phantom->add_subcommand("gen", "Render a phantom volume and its ground truth");
  Common gen_c;
  std::string scale = "desk";
  int slices = 32;
  std::optional<int> n_vessels;
  std::optional<double> noise;
  gen->add_option("--config", gen_c.config, "Phantom JSON (the \"phantom\" section format)");
  gen->add_option("--seed", gen_c.seed, "Seed");
  gen->add_option("--out", gen_c.out, "Output directory")->required();
  gen->add_option("--scale", scale, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
  gen->add_option("--slices", slices, "B-scan count at paper scale")->check(CLI::PositiveNumber);
  gen->add_option("--n-vessels", n_vessels, "Vessel count");
  gen->add_option("--noise", noise, "Noise sigma");

  // run
  auto* run = app.add_subcommand("run", "Run the full cascade from a pipeline config");
  Common run_c;
  bool no_overlays = false;
  bool no_montage = false;
  add_common(run, run_c, true);
  run->add_flag("--no-overlays", no_overlays, "Skip per-slice overlay PGMs");
  run->add_flag("--no-montage", no_montage, "Skip the summary montage");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "Four-variant ablation over phantom seeds");
  Common abl_c;
  std::string seeds_text = "0-9";
  double min_gap = 0.01;
  add_common(ablate, abl_c);
  ablate->add_option("--seeds", seeds_text, "Seed list, e.g. 0-9 or 1,3,5");
  ablate->add_option("--min-gap", min_gap, "Smallest IoU step accepted by the ordering check");

  // eval
  auto* eval = app.add_subcommand("eval", "Score a predicted mask against ground truth");
  std::string pred_path, gt_path, prob_path, eval_out, eval_name = "pred";
  eval->add_option("--pred", pred_path, "Predicted vessel mask")->required();
  eval->add_option("--gt", gt_path, "Ground-truth vessel mask")->required();
  eval->add_option("--prob", prob_path, "Probability map (enables AUC)");
  eval->add_option("--name", eval_name, "Method column value");
  eval->add_option("--out", eval_out, "Output directory");

  // individual stages
  auto* layers = app.add_subcommand("layers", "Trace the four retinal boundaries");
  Common lay_c;
  std::string lay_in;
  add_common(layers, lay_c);
  layers->add_option("--in", lay_in, "Input volume")->required();

  auto* enface = app.add_subcommand("enface", "Project the RPE band en face");
  Common enf_c;
  std::string enf_in, enf_bounds;
  add_common(enface, enf_c);
  enface->add_option("--in", enf_in, "Input volume")->required();
  enface->add_option("--boundaries", enf_bounds, "Boundaries CSV")->required();

  auto* shadows = app.add_subcommand("shadows", "Segment vessel shadows on an en-face image");
  Common sh_c;
  std::string sh_in;
  add_common(shadows, sh_c);
  shadows->add_option("--in", sh_in, "En-face image")->required();

  auto* vessels = app.add_subcommand("vessels", "Score, infuse and binarize vessels");
  Common ves_c;
  std::string ves_in, ves_bounds, ves_shadow;
  add_common(vessels, ves_c);
  vessels->add_option("--in", ves_in, "Input volume")->required();
  vessels->add_option("--boundaries", ves_bounds, "Boundaries CSV")->required();
  vessels->add_option("--shadow-mask", ves_shadow, "Shadow mask (else segmented here)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      PhantomConfig cfg = default_config(scale == "paper" ? PhantomScale::Paper : PhantomScale::Desk, slices);
      in_stage(Stage::Config, [&] {
        if (!gen_c.config.empty()) cfg = phantom_config_from_json(read_json_file(gen_c.config), cfg);
        if (gen_c.seed) cfg.seed = *gen_c.seed;
        if (n_vessels) cfg.n_vessels = *n_vessels;
        if (noise) cfg.noise_sigma = *noise;
        cfg.validate();
      });
      auto ph = in_stage(Stage::Input, [&] { return generate(cfg, threads); });
      write_phantom(ph, cfg, gen_c.out);
      std::cout << "phantom dims " << cfg.dims.str() << " n_vessels " << cfg.n_vessels << " seed "
                << cfg.seed << " -> " << gen_c.out << "\n";
    } else if (*run) {
      auto cfg = load_or_default(run_c);
      if (no_overlays) cfg.overlays = false;
      if (no_montage) cfg.montage = false;
      auto summary = run_pipeline(cfg, threads);
      std::cout << "vessel voxels " << summary.result.mask.count() << " components "
                << summary.result.components << " -> " << cfg.output_dir.string() << "\n";
      if (!summary.metrics.empty()) std::cout << metrics_csv(summary.metrics);
    } else if (*ablate) {
      auto cfg = load_or_default(abl_c);
      if (abl_c.seed) throw StageError(Stage::Config, "ablate takes --seeds, not --seed");
      const auto seeds = parse_seeds(seeds_text);
      auto res = run_ablation(cfg, seeds, threads, min_gap);
      write_ablation(res, cfg.output_dir);
      std::cout << ablation_csv(res) << ordering_line(res) << "\n";
      return res.ordering ? 0 : 1;
    } else if (*eval) {
      auto pred = in_stage(Stage::Input, [&] { return read_voxel_mask(pred_path); });
      auto gt = in_stage(Stage::Input, [&] { return read_voxel_mask(gt_path); });
      std::optional<ProbabilityMap3D> prob;
      if (!prob_path.empty()) prob = in_stage(Stage::Input, [&] { return read_probability_map(prob_path); });
      auto rep = in_stage(Stage::Evaluation, [&] {
        require_same_dims(pred.dims(), gt.dims(), "prediction vs ground truth");
        return evaluate(pred, gt, prob ? &*prob : nullptr);
      });
      const std::string csv = metrics_csv_header() + metrics_csv_row(eval_name, rep);
      write_text(out_dir(eval_out) / "metrics.csv", csv);
      std::cout << csv;
    } else if (*layers) {
      const auto cfg = load_or_default(lay_c);
      auto vol = in_stage(Stage::Input, [&] { return read_oct_volume(lay_in); });
      auto b = in_stage(Stage::BoundarySource, [&] { return segment_boundaries(vol, cfg.dp, threads); });
      in_stage(Stage::Output, [&] { write_boundaries(b, out_dir(lay_c.out) / "boundaries.csv"); });
    } else if (*enface) {
      auto vol = in_stage(Stage::Input, [&] { return read_oct_volume(enf_in); });
      auto b = in_stage(Stage::BoundarySource, [&] {
        auto r = import_boundaries(enf_bounds, vol.dims().height);
        r.require_matches(vol.dims());
        return r;
      });
      auto e = in_stage(Stage::ShadowSource, [&] { return project_rpe(vol, b); });
      const auto dir = out_dir(enf_c.out);
      in_stage(Stage::Output, [&] {
        write_plane(e, dir / "enface");
        write_pgm(to_gray(e.grid()), dir / "enface.pgm");
      });
    } else if (*shadows) {
      const auto cfg = load_or_default(sh_c);
      auto e = in_stage(Stage::Input, [&] { return read_enface(sh_in); });
      auto seg = in_stage(Stage::ShadowSource, [&] { return segment_shadows(e, cfg.shadow); });
      const auto dir = out_dir(sh_c.out);
      in_stage(Stage::Output, [&] {
        write_plane(seg.mask, dir / "shadow_mask");
        write_plane(seg.contrast, dir / "shadow_contrast");
        write_pgm(to_gray(seg.mask), dir / "shadow_mask.pgm");
      });
    } else if (*vessels) {
      auto cfg = load_or_default(ves_c);
      cfg.boundaries_import = ves_bounds;
      if (!ves_shadow.empty()) cfg.shadows_import = ves_shadow;
      auto vol = in_stage(Stage::Input, [&] { return read_oct_volume(ves_in); });
      auto st = compute_stages(cfg, vol, threads);
      auto res = in_stage(Stage::Infusion, [&] { return finish_cascade(st, cfg.infusion); });
      const auto dir = out_dir(ves_c.out);
      in_stage(Stage::Output, [&] {
        write_volume(res.probability, dir / "probability");
        write_volume(res.mask, dir / "vessel_mask");
      });
      std::cout << "vessel voxels " << res.mask.count() << " components " << res.components << "\n";
    }
  } catch (const StageError& e) {
    std::cerr << "error in " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
