// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "octcascade/pipeline.hpp"

using namespace octcascade;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

constexpr int kSeeds = 10;

PhantomConfig desk(std::uint64_t seed, double noise) {
  auto c = default_config(PhantomScale::Desk);
  c.seed = seed;
  c.noise_sigma = noise;
  return c;
}

// 1
Outcome ablation_ordering(int threads) {
  PipelineConfig c;
  c.phantom = default_config(PhantomScale::Desk);
  std::vector<std::uint64_t> seeds;
  for (int s = 0; s < kSeeds; ++s) seeds.push_back(s);
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_ablation(c, seeds, threads, 0.01);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::string d;
  for (const auto& a : r.aggregate) d += std::string(a.variant.name) + "=" + fmt("%.4f", a.iou.mean) + " ";
  d += "time=" + fmt("%.1fs", secs);
  return {r.ordering && secs <= 60.0, d};
}

// 2
Outcome full_infusion_quality(int threads) {
  double sum = 0.0;
  for (int s = 0; s < kSeeds; ++s) {
    const auto p = generate(desk(s, 0.0), threads);
    const auto run = run_cascade(p.volume, {}, {}, {}, InfusionConfig{}, threads);
    sum += iou(confusion(run.result.mask, p.truth.vessel_mask)).value;
  }
  const double mean = sum / kSeeds;
  return {mean >= 0.80, "mean IoU(+1+2, noise-free)=" + fmt("%.4f", mean)};
}

// 3
Outcome dp_optimality() {
  std::mt19937_64 eng(3);
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng); };
  int mismatches = 0;
  for (int i = 0; i < 100; ++i) {
    const int h = uni(1, 8);
    const int w = uni(1, 6);
    Grid2<double> cost(h, w);
    for (auto& v : cost.values()) v = uni(-64, 64) / 16.0;  // dyadic: sums are exact
    const PathConstraints pc{uni(0, 8) / 8.0, uni(1, 3)};
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> path(w);
    std::function<void(int, double)> rec = [&](int x, double acc) {
      if (x == w) {
        best = std::min(best, acc);
        return;
      }
      for (int z = 0; z < h; ++z) {
        if (x > 0 && std::abs(z - path[x - 1]) > pc.max_jump) continue;
        path[x] = z;
        rec(x + 1, acc + cost(z, x) + (x > 0 ? pc.smoothness * std::abs(z - path[x - 1]) : 0.0));
      }
    };
    rec(0, 0.0);
    const auto got = trace_boundary(cost, pc, std::vector<ColumnBand>(w, ColumnBand{0, h - 1}));
    if (path_cost(cost, pc.smoothness, got) != best) ++mismatches;
  }
  return {mismatches == 0, std::to_string(100 - mismatches) + "/100 exact"};
}

// 4
Outcome metric_oracle() {
  std::mt19937_64 eng(4);
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng); };
  double worst = 0.0;
  int done = 0;
  while (done < 100) {
    const int n = uni(2, 1000);
    const int levels = uni(0, 1) ? 7 : 1 << 20;
    std::vector<float> s(n);
    std::vector<std::uint8_t> l(n);
    for (int k = 0; k < n; ++k) {
      s[k] = static_cast<float>(uni(0, levels)) / levels;
      l[k] = static_cast<std::uint8_t>(uni(0, 3) == 0);
    }
    double wins = 0.0, pairs = 0.0;
    for (int a = 0; a < n; ++a) {
      if (!l[a]) continue;
      for (int b = 0; b < n; ++b) {
        if (l[b]) continue;
        pairs += 1;
        wins += s[a] > s[b] ? 1.0 : s[a] == s[b] ? 0.5 : 0.0;
      }
    }
    if (pairs == 0) continue;
    worst = std::max(worst, std::abs(auc(s, l) - wins / pairs));
    ++done;
  }
  const bool hand = acc(ConfusionCounts{1, 7, 1, 1}).value == 0.8 &&
                    iou(ConfusionCounts{2, 0, 1, 1}).value == 0.5 &&
                    sen(ConfusionCounts{3, 0, 0, 1}).value == 0.75 &&
                    iou(ConfusionCounts{1, 7, 1, 1}).value == 1.0 / 3.0;
  return {worst <= 1e-9 && hand, "max |auc - pairwise|=" + fmt("%.2e", worst) +
                                     (hand ? ", fixtures exact" : ", fixture mismatch")};
}

// 5
Outcome boundary_accuracy(int threads) {
  double worst_clean = 0.0, worst_noisy = 0.0;
  for (int s = 0; s < kSeeds; ++s) {
    for (double noise : {0.0, 0.03}) {
      const auto p = generate(desk(s, noise), threads);
      const auto b = segment_boundaries(p.volume, default_dp_config(), threads);
      for (Surface sf : kSurfaces) {
        const double e = mean_abs_surface_error(b, p.truth.boundaries, sf);
        (noise > 0 ? worst_noisy : worst_clean) = std::max(noise > 0 ? worst_noisy : worst_clean, e);
      }
    }
  }
  return {worst_clean <= 1.0 && worst_noisy <= 2.0,
          "worst surface error noise-free=" + fmt("%.3f", worst_clean) + " noisy=" + fmt("%.3f", worst_noisy)};
}

// 6
Outcome shadow_detection(int threads) {
  double worst = 1.0;
  for (int s = 0; s < kSeeds; ++s) {
    const auto p = generate(desk(s, 0.0), threads);
    const auto b = segment_boundaries(p.volume, default_dp_config(), threads);
    const auto seg = segment_shadows(project_rpe(p.volume, b));
    std::size_t inter = 0;
    for (std::size_t i = 0; i < seg.mask.grid().size(); ++i) {
      inter += seg.mask.grid()[i] && p.truth.shadow_footprint.grid()[i];
    }
    const double dice = 2.0 * inter / (seg.mask.count() + p.truth.shadow_footprint.count());
    worst = std::min(worst, dice);
  }
  return {worst >= 0.90, "min Dice over seeds=" + fmt("%.4f", worst)};
}

// 7
Outcome mask_algebra() {
  constexpr int kCases = 1000;
  std::mt19937_64 eng(7);
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng); };
  auto real = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng); };
  auto rand_dims = [&] { return Dims{uni(1, 3), uni(8, 12), uni(8, 12)}; };
  auto rand_bounds = [&](const Dims& d) {
    BoundarySet::Surfaces s;
    for (auto& g : s) g = Grid2<double>(d.slices, d.width, 0.0);
    for (int sl = 0; sl < d.slices; ++sl)
      for (int x = 0; x < d.width; ++x) {
        double v[4];
        for (auto& e : v) e = uni(0, 2) == 0 ? uni(0, d.height - 1) : real(0, d.height - 1);
        std::sort(v, v + 4);
        for (int k = 0; k < 4; ++k) s[k](sl, x) = v[k];
      }
    return BoundarySet(std::move(s), d.height);
  };
  auto rand_plane = [&](const Dims& d, double p) {
    Grid2<std::uint8_t> g(d.slices, d.width, 0);
    for (auto& v : g.values()) v = real(0, 1) < p;
    return PixelMask(std::move(g));
  };
  auto rand_prob = [&](const Dims& d) {
    Grid3<float> g(d);
    for (auto& v : g.values()) v = static_cast<float>(uni(0, 8)) / 8.0f;
    return ProbabilityMap3D(std::move(g));
  };
  auto rand_mask = [&](const Dims& d, double p) {
    Grid3<std::uint8_t> g(d, 0);
    for (auto& v : g.values()) v = real(0, 1) < p;
    return VoxelMask(std::move(g));
  };

  int depth = 0, rounding = 0, subset = 0, idem = 0;
  for (int i = 0; i < kCases; ++i) {
    const Dims d = rand_dims();
    // depth invariance
    {
      const auto m = transverse_mask(rand_plane(d, real(0, 0.5)), d, uni(0, 2));
      bool ok = true;
      for (int s = 0; s < d.slices; ++s)
        for (int x = 0; x < d.width; ++x)
          for (int z = 1; z < d.height; ++z) ok = ok && m(s, z, x) == m(s, 0, x);
      depth += ok;
    }
    // longitudinal rounding
    {
      const auto b = rand_bounds(d);
      const auto m = longitudinal_mask(b, d);
      bool ok = true;
      for (int s = 0; s < d.slices; ++s)
        for (int x = 0; x < d.width; ++x)
          for (int z = 0; z < d.height; ++z) {
            ok = ok && m(s, z, x) == (z >= b(Surface::Ilm, s, x) && z <= b(Surface::InlLower, s, x));
          }
      rounding += ok;
    }
    // final mask within enabled masks
    {
      InfusionConfig cfg;
      cfg.use_longitudinal = uni(0, 1);
      cfg.use_transverse = uni(0, 1);
      cfg.transverse_dilation = uni(0, 2);
      cfg.min_component_vox = uni(1, 3);
      cfg.connectivity = uni(0, 1) ? 6 : 26;
      auto b = rand_bounds(d);
      auto pm = rand_plane(d, real(0, 0.5));
      CascadeStages st{b, EnFaceImage(Grid2<float>(d.slices, d.width, 0.5f)), pm,
                       Grid2<float>(d.slices, d.width, 0.0f), VesselScores{rand_prob(d), false}};
      const auto r = finish_cascade(st, cfg);
      const auto lm = longitudinal_mask(b, d);
      const auto tm = transverse_mask(pm, d, cfg.transverse_dilation);
      bool ok = true;
      for (std::size_t k = 0; k < d.voxels(); ++k) {
        if (!r.mask[k]) continue;
        if (cfg.use_longitudinal && !lm[k]) ok = false;
        if (cfg.use_transverse && !tm[k]) ok = false;
      }
      subset += ok;
    }
    // infusion idempotence
    {
      const auto p = rand_prob(d);
      const auto lm = rand_mask(d, real(0.2, 0.9));
      const auto tm = rand_mask(d, real(0.2, 0.9));
      const auto once = infuse(p, &lm, &tm);
      idem += infuse(once, &lm, &tm) == once;
    }
  }
  const bool pass = depth == kCases && rounding == kCases && subset == kCases && idem == kCases;
  return {pass, "depth-invariance " + std::to_string(depth) + ", rounding " + std::to_string(rounding) +
                    ", subset " + std::to_string(subset) + ", idempotence " + std::to_string(idem) +
                    " of " + std::to_string(kCases)};
}

// 8
Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "octcascade_acceptance_determinism";
  fs::remove_all(root);
  std::vector<fs::path> dirs;
  int run = 0;
  for (int threads : {1, 1, 4, 4}) {
    PipelineConfig c;
    c.phantom = default_config(PhantomScale::Desk);
    c.phantom->seed = 17;
    c.output_dir = root / ("run" + std::to_string(run++));
    c.overlays = false;
    const auto ph = generate(*c.phantom, threads);
    write_phantom(ph, *c.phantom, c.output_dir / "phantom");
    run_pipeline(c, threads);
    dirs.push_back(c.output_dir);
  }
  const char* files[] = {"phantom/volume.raw", "phantom/gt_vessels.raw", "vessel_mask.raw",
                         "probability.raw",    "metrics.csv",            "boundaries.csv"};
  int mismatches = 0;
  for (const char* f : files) {
    const auto ref = slurp(dirs[0] / f);
    if (ref.empty()) ++mismatches;
    for (std::size_t i = 1; i < dirs.size(); ++i) mismatches += slurp(dirs[i] / f) != ref;
  }
  fs::remove_all(root);
  return {mismatches == 0, std::to_string(std::size(files)) + " artifacts x 4 runs (threads 1,1,4,4), " +
                               std::to_string(mismatches) + " mismatches"};
}

// 9
Outcome poly_lr_check() {
  const bool start = poly_lr({1e-4, 0, 100, 0.9}) == 1e-4;
  const bool end = poly_lr({1e-4, 100, 100, 0.9}) == 0.0;
  // 1e-4 * 0.75^0.9 to 40 digits.
  const double oracle = 7.718895067235704380431752875527048e-5;
  const double rel = std::abs(poly_lr({1e-4, 25, 100, 0.9}) - oracle) / oracle;
  return {start && end && rel <= 1e-12, "endpoints " + std::string(start && end ? "exact" : "wrong") +
                                            ", interior rel err=" + fmt("%.2e", rel)};
}

}  // namespace

int main() {
  const int threads = threads_from_env();
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"ablation ordering base < +1 < +2 < +1+2 (10 desk seeds, gaps >= 0.01, <= 60 s)",
       [&] { return ablation_ordering(threads); }},
      {"full-infusion IoU >= 0.80 on noise-free desk phantoms", [&] { return full_infusion_quality(threads); }},
      {"DP optimality vs exhaustive search (100 instances)", [] { return dp_optimality(); }},
      {"AUC vs pairwise oracle, IoU/SEN/ACC fixtures", [] { return metric_oracle(); }},
      {"boundary error <= 1.0 noise-free, <= 2.0 at sigma 0.03", [&] { return boundary_accuracy(threads); }},
      {"shadow Dice >= 0.90 on noise-free desk phantoms", [&] { return shadow_detection(threads); }},
      {"mask algebra invariants (1000 cases each)", [] { return mask_algebra(); }},
      {"determinism across runs and thread counts 1/4", [] { return determinism(); }},
      {"poly_lr endpoints and high-precision interior", [] { return poly_lr_check(); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s criterion %zu: %s -- %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
