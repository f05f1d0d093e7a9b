#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "gen.hpp"
#include "octcascade/types.hpp"

using namespace octcascade;

namespace {

BoundarySet::Surfaces flat_surfaces(int slices, int width, double ilm, double inl, double rpe,
                                    double bm) {
  return {Grid2<double>(slices, width, ilm), Grid2<double>(slices, width, inl),
          Grid2<double>(slices, width, rpe), Grid2<double>(slices, width, bm)};
}

}  // namespace

TEST(OctVolume, RejectsOutOfRangeVoxelAndNamesIt) {
  Grid3<float> g(Dims{2, 8, 8}, 0.5f);
  g(1, 3, 4) = 1.5f;
  try {
    OctVolume v(g);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("(1, 3, 4)"), std::string::npos) << e.what();
  }
}

TEST(OctVolume, RejectsNonFinite) {
  Grid3<float> g(Dims{1, 8, 8}, 0.5f);
  g(0, 0, 0) = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(OctVolume{g}, ValidationError);
}

TEST(OctVolume, RejectsTooSmall) {
  EXPECT_THROW(OctVolume(Grid3<float>(Dims{1, 7, 8}, 0.0f)), ValidationError);
  EXPECT_THROW(OctVolume(Grid3<float>(Dims{1, 8, 7}, 0.0f)), ValidationError);
  EXPECT_THROW(OctVolume(Grid3<float>(Dims{0, 8, 8}, 0.0f)), ValidationError);
  EXPECT_NO_THROW(OctVolume(Grid3<float>(Dims{1, 8, 8}, 0.0f)));
}

TEST(OctVolume, FromIntegerNormalizesByTypeMax) {
  std::vector<std::uint16_t> raw(64, 0);
  raw[0] = 65535;
  raw[1] = 32768;
  auto v = OctVolume::from_integer<std::uint16_t>(Dims{1, 8, 8}, raw);
  EXPECT_EQ(v(0, 0, 0), 1.0f);
  EXPECT_FLOAT_EQ(v(0, 0, 1), 32768.0f / 65535.0f);
  EXPECT_EQ(v(0, 1, 0), 0.0f);
}

TEST(VoxelMask, RejectsNonBinary) {
  Grid3<std::uint8_t> g(Dims{1, 2, 2}, 0);
  g[3] = 2;
  EXPECT_THROW(VoxelMask{g}, ValidationError);
}

TEST(ProbabilityMap, RejectsOutsideUnitInterval) {
  Grid3<float> g(Dims{1, 2, 2}, 0.0f);
  g[0] = -0.01f;
  EXPECT_THROW(ProbabilityMap3D{g}, ValidationError);
}

TEST(BoundarySet, AcceptsOrderedAndEqualSurfaces) {
  EXPECT_NO_THROW(BoundarySet(flat_surfaces(2, 3, 1.0, 1.0, 4.5, 4.5), 8));
  EXPECT_NO_THROW(BoundarySet(flat_surfaces(2, 3, 0.0, 0.0, 0.0, 7.0), 8));
}

TEST(BoundarySet, OrderingViolationNamesSliceAndColumn) {
  auto s = flat_surfaces(3, 5, 1.0, 2.0, 3.0, 4.0);
  s[static_cast<int>(Surface::RpeUpper)](2, 4) = 1.5;
  try {
    BoundarySet b(s, 8);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    const std::string m = e.what();
    EXPECT_NE(m.find("slice 2"), std::string::npos) << m;
    EXPECT_NE(m.find("column 4"), std::string::npos) << m;
  }
}

TEST(BoundarySet, RejectsBmBelowFloorAndNegativeIlm) {
  EXPECT_THROW(BoundarySet(flat_surfaces(1, 2, 1.0, 2.0, 3.0, 7.5), 8), ValidationError);
  EXPECT_THROW(BoundarySet(flat_surfaces(1, 2, -0.5, 2.0, 3.0, 4.0), 8), ValidationError);
}

TEST(BoundarySet, RejectsShapeMismatch) {
  auto s = flat_surfaces(2, 3, 1.0, 2.0, 3.0, 4.0);
  s[1] = Grid2<double>(2, 4, 2.0);
  EXPECT_THROW(BoundarySet(s, 8), ShapeMismatchError);
}

TEST(BoundarySet, RandomOrderedSetsAlwaysValidate) {
  testgen::Gen g(11);
  for (int i = 0; i < 200; ++i) {
    const Dims d = g.dims(3, 20, 12);
    auto b = g.boundaries(d);
    EXPECT_NO_THROW(b.require_matches(d));
  }
}

TEST(Surface, NamesRoundTrip) {
  for (Surface s : kSurfaces) EXPECT_EQ(parse_surface(surface_name(s)), s);
  EXPECT_FALSE(parse_surface("GCL").has_value());
}
