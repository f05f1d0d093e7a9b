#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "gen.hpp"
#include "octcascade/enface.hpp"
#include "octcascade/phantom.hpp"

using namespace octcascade;

namespace {

double naive_box(const Grid2<float>& img, int r, int c, int ws, int wx) {
  double acc = 0.0;
  for (int i = -ws / 2; i <= ws / 2; ++i) {
    for (int j = -wx / 2; j <= wx / 2; ++j) {
      acc += img(std::clamp(r + i, 0, img.rows() - 1), std::clamp(c + j, 0, img.cols() - 1));
    }
  }
  return acc / (ws * wx);
}

double dice(const PixelMask& a, const PixelMask& b) {
  std::size_t inter = 0;
  for (std::size_t i = 0; i < a.grid().size(); ++i) inter += a.grid()[i] && b.grid()[i];
  const std::size_t total = a.count() + b.count();
  return total ? 2.0 * inter / total : 1.0;
}

}  // namespace

TEST(ProjectRpe, IsMeanOverRpeBand) {
  testgen::Gen g(31);
  for (int i = 0; i < 50; ++i) {
    const Dims d = g.dims(3, 20, 10);
    OctVolume v(g.unit_grid(d));
    const auto b = g.boundaries(d);
    const auto e = project_rpe(v, b);
    for (int s = 0; s < d.slices; ++s) {
      for (int x = 0; x < d.width; ++x) {
        const int lo = static_cast<int>(std::ceil(b(Surface::RpeUpper, s, x)));
        const int hi = static_cast<int>(std::floor(b(Surface::Bm, s, x)));
        double expect;
        if (lo <= hi) {
          double sum = 0.0;
          for (int z = lo; z <= hi; ++z) sum += v(s, z, x);
          expect = sum / (hi - lo + 1);
        } else {
          expect = v(s, static_cast<int>(std::lround(b(Surface::RpeUpper, s, x))), x);
        }
        EXPECT_NEAR(e(s, x), expect, 1e-6);
      }
    }
  }
}

TEST(BoxMean, MatchesNaiveWithReplicatedEdges) {
  testgen::Gen g(32);
  for (int i = 0; i < 100; ++i) {
    Grid2<float> img(g.integer(1, 12), g.integer(1, 12));
    for (auto& v : img.values()) v = static_cast<float>(g.real(0, 1));
    const int ws = 2 * g.integer(1, 4) + 1;
    const int wx = 2 * g.integer(1, 4) + 1;
    const auto bm = box_mean(img, ws, wx);
    for (int r = 0; r < img.rows(); ++r)
      for (int c = 0; c < img.cols(); ++c) EXPECT_NEAR(bm(r, c), naive_box(img, r, c, ws, wx), 1e-12);
  }
}

TEST(ShadowContrast, UniformImageHasNoShadow) {
  EnFaceImage e(Grid2<float>(10, 20, 0.8f));
  const auto seg = segment_shadows(e);
  EXPECT_EQ(seg.mask.count(), 0u);
  for (float c : seg.contrast.values()) EXPECT_EQ(c, 0.0f);
}

TEST(ShadowContrast, FollowsDefinition) {
  testgen::Gen g(33);
  Grid2<float> img(9, 15);
  for (auto& v : img.values()) v = static_cast<float>(g.real(0, 1));
  ShadowConfig cfg;
  cfg.window_slices = 3;
  cfg.window_cols = 5;
  const auto c = shadow_contrast(EnFaceImage(img), cfg);
  for (int r = 0; r < 9; ++r) {
    for (int x = 0; x < 15; ++x) {
      const double bg = naive_box(img, r, x, 3, 5);
      const double expect = std::max(0.0, (bg - img(r, x)) / std::max(bg, 1e-6));
      EXPECT_NEAR(c(r, x), expect, 1e-6);
    }
  }
}

TEST(ShadowContrast, AllZeroImageIsSafe) {
  const auto seg = segment_shadows(EnFaceImage(Grid2<float>(5, 5, 0.0f)), ShadowConfig{3, 3, 0.15, 1, 0});
  EXPECT_EQ(seg.mask.count(), 0u);
}

TEST(SegmentShadows, DarkStripeIsFound) {
  Grid2<float> img(12, 30, 0.9f);
  for (int s = 0; s < 12; ++s) {
    img(s, 14) = 0.4f;
    img(s, 15) = 0.4f;
  }
  const auto seg = segment_shadows(EnFaceImage(img));
  for (int s = 0; s < 12; ++s) {
    EXPECT_TRUE(seg.mask(s, 14));
    EXPECT_TRUE(seg.mask(s, 15));
    EXPECT_FALSE(seg.mask(s, 5));
  }
}

TEST(SegmentShadows, SmallComponentsRemoved) {
  Grid2<float> img(12, 30, 0.9f);
  img(3, 3) = 0.1f;
  ShadowConfig cfg;
  cfg.min_component_px = 2;
  EXPECT_EQ(segment_shadows(EnFaceImage(img), cfg).mask.count(), 0u);
  cfg.min_component_px = 1;
  EXPECT_EQ(segment_shadows(EnFaceImage(img), cfg).mask.count(), 1u);
}

TEST(SegmentShadows, ThresholdIsStrict) {
  // One dark pixel among bright ones with a 3x3 window: B = (8 * 1 + e) / 9.
  Grid2<float> img(3, 3, 1.0f);
  img(1, 1) = 0.0f;
  ShadowConfig cfg{3, 3, 0.0, 1, 0};
  cfg.threshold = 1.0;  // contrast is exactly 1
  EXPECT_EQ(segment_shadows(EnFaceImage(img), cfg).mask.count(), 0u);
  cfg.threshold = 0.999;
  EXPECT_EQ(segment_shadows(EnFaceImage(img), cfg).mask.count(), 1u);
}

TEST(ShadowConfig, Validation) {
  EXPECT_THROW((ShadowConfig{8, 15, 0.15, 10, 0}).validate(), ConfigError);
  EXPECT_THROW((ShadowConfig{9, 1, 0.15, 10, 0}).validate(), ConfigError);
  EXPECT_THROW((ShadowConfig{9, 15, 0.0, 10, 0}).validate(), ConfigError);
  EXPECT_NO_THROW(ShadowConfig{}.validate());
}

TEST(SegmentShadows, RecoversPhantomFootprint) {
  auto c = default_config(PhantomScale::Desk);
  c.noise_sigma = 0.0;
  for (std::uint64_t seed : {0u, 1u}) {
    c.seed = seed;
    const auto p = generate(c);
    const auto seg = segment_shadows(project_rpe(p.volume, p.truth.boundaries));
    EXPECT_GE(dice(seg.mask, p.truth.shadow_footprint), 0.9) << "seed " << seed;
  }
}

TEST(ImportShadowMask, RoundTripsSegmentation) {
  auto c = default_config(PhantomScale::Desk);
  c.dims.slices = 12;
  const auto p = generate(c);
  const auto seg = segment_shadows(project_rpe(p.volume, p.truth.boundaries));
  const auto path = std::filesystem::temp_directory_path() / "octcascade_shadow_roundtrip";
  write_plane(seg.mask, path);
  EXPECT_EQ(import_shadow_mask(path), seg.mask);
}
