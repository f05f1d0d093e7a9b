#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gen.hpp"
#include "octcascade/io.hpp"

using namespace octcascade;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / "octcascade_io_tests" / name;
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Container, VolumeRoundTripIsByteIdentical) {
  testgen::Gen g(1);
  const auto dir = scratch("vol");
  OctVolume v(g.unit_grid(Dims{2, 8, 8}), Spacing{11.0, 3.9, 5.7});
  write_volume(v, dir / "v");
  auto back = read_oct_volume(dir / "v.json");
  EXPECT_EQ(back, v);
  write_volume(back, dir / "w");
  EXPECT_EQ(slurp(dir / "v.raw"), slurp(dir / "w.raw"));
  EXPECT_EQ(fs::file_size(dir / "v.raw"), 2u * 8 * 8 * 4);
}

TEST(Container, MaskTrueIsByteOne) {
  const auto dir = scratch("mask");
  Grid3<std::uint8_t> m(Dims{1, 2, 3}, 0);
  m(0, 1, 2) = 1;
  write_volume(VoxelMask(m), dir / "m");
  const auto raw = slurp(dir / "m.raw");
  ASSERT_EQ(raw.size(), 6u);
  EXPECT_EQ(static_cast<unsigned char>(raw[5]), 0x01);
  EXPECT_EQ(raw[0], 0);
  EXPECT_EQ(read_voxel_mask(dir / "m"), VoxelMask(m));
}

TEST(Container, HeaderDescribesPayload) {
  const auto dir = scratch("hdr");
  write_volume(ProbabilityMap3D(Grid3<float>(Dims{2, 8, 8}, 0.25f)), dir / "p");
  const auto h = nlohmann::json::parse(slurp(dir / "p.json"));
  EXPECT_EQ(h["dims"], nlohmann::json({2, 8, 8}));
  EXPECT_EQ(h["element_type"], "float32");
  EXPECT_EQ(h["byte_order"], "little");
  EXPECT_EQ(h["kind"], "probability");
}

TEST(Container, TruncatedPayloadIsCorrupt) {
  const auto dir = scratch("trunc");
  write_volume(OctVolume(Grid3<float>(Dims{2, 8, 8}, 0.5f)), dir / "v");
  {
    std::ofstream out(dir / "v.raw", std::ios::binary | std::ios::trunc);
    out << std::string(100, '\0');
  }
  EXPECT_THROW(read_oct_volume(dir / "v"), CorruptFileError);
}

TEST(Container, KindMismatchIsRejected) {
  const auto dir = scratch("kind");
  write_volume(VoxelMask(Grid3<std::uint8_t>(Dims{1, 8, 8}, 0)), dir / "m");
  EXPECT_THROW(read_oct_volume(dir / "m"), Error);
}

TEST(Container, MissingFileIsIoError) {
  EXPECT_THROW(read_oct_volume(scratch("none") / "absent"), IoError);
}

TEST(Container, RandomVolumesRoundTrip) {
  testgen::Gen g(2);
  const auto dir = scratch("rand");
  for (int i = 0; i < 50; ++i) {
    const Dims d = g.dims(3, 12, 12);
    ProbabilityMap3D p(g.unit_grid(d));
    write_volume(p, dir / "p");
    EXPECT_EQ(read_probability_map(dir / "p"), p);
    VoxelMask m(g.binary_grid(d, 0.3));
    write_volume(m, dir / "m");
    EXPECT_EQ(read_voxel_mask(dir / "m"), m);
  }
}

TEST(Container, PlanesRoundTrip) {
  testgen::Gen g(3);
  const auto dir = scratch("plane");
  PixelMask pm(g.binary_plane(5, 9, 0.4));
  write_plane(pm, dir / "pm");
  EXPECT_EQ(read_pixel_mask(dir / "pm"), pm);
  Grid2<float> e(5, 9, 0.0f);
  for (auto& v : e.values()) v = static_cast<float>(g.real(0, 1));
  write_plane(EnFaceImage(e), dir / "e");
  EXPECT_EQ(read_enface(dir / "e").grid(), e);
}

TEST(BoundariesCsv, RoundTripIsExact) {
  testgen::Gen g(4);
  const auto dir = scratch("csv");
  for (int i = 0; i < 50; ++i) {
    const Dims d = g.dims(3, 30, 10);
    auto b = g.boundaries(d);
    write_boundaries(b, dir / "b.csv");
    auto back = read_boundaries(dir / "b.csv", d.height);
    EXPECT_EQ(back, b);
  }
}

TEST(BoundariesCsv, MissingSurfaceNamesIt) {
  const auto dir = scratch("csv_missing");
  std::ofstream(dir / "b.csv") << "boundary,slice,column,depth\n"
                                << "ILM,0,0,1\nINL_LOWER,0,0,2\nBM,0,0,4\n";
  try {
    read_boundaries(dir / "b.csv", 8);
    FAIL() << "expected IncompleteSetError";
  } catch (const IncompleteSetError& e) {
    EXPECT_NE(std::string(e.what()).find("RPE_UPPER"), std::string::npos) << e.what();
  }
}

TEST(BoundariesCsv, DuplicateRowIsCorrupt) {
  const auto dir = scratch("csv_dup");
  std::ofstream(dir / "b.csv") << "boundary,slice,column,depth\n"
                                << "ILM,0,0,1\nILM,0,0,1\nINL_LOWER,0,0,2\nRPE_UPPER,0,0,3\nBM,0,0,4\n";
  EXPECT_THROW(read_boundaries(dir / "b.csv", 8), CorruptFileError);
}

TEST(Pgm, HeaderAndPayload) {
  const auto dir = scratch("pgm");
  Grid2<std::uint8_t> img(2, 3, 7);
  write_pgm(img, dir / "i.pgm");
  const auto bytes = slurp(dir / "i.pgm");
  EXPECT_EQ(bytes.substr(0, 11), "P5\n3 2\n255\n");
  EXPECT_EQ(bytes.size(), 11u + 6u);
}

TEST(Container, OutOfRangeProbabilityIsValidationError) {
  const auto dir = scratch("range");
  write_volume(ProbabilityMap3D(Grid3<float>(Dims{1, 8, 8}, 0.5f)), dir / "p");
  {
    std::fstream f(dir / "p.raw", std::ios::binary | std::ios::in | std::ios::out);
    const float bad = 1.5f;  // little-endian host assumed by the test
    f.seekp(4 * 10);
    f.write(reinterpret_cast<const char*>(&bad), 4);
  }
  try {
    read_probability_map(dir / "p");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("(0, 1, 2)"), std::string::npos) << e.what();
  }
}

TEST(Container, ReadVolumeDispatchesOnKind) {
  const auto dir = scratch("dispatch");
  write_volume(VoxelMask(Grid3<std::uint8_t>(Dims{1, 8, 8}, 1)), dir / "m");
  EXPECT_TRUE(std::holds_alternative<VoxelMask>(read_volume(dir / "m")));
  write_volume(OctVolume(Grid3<float>(Dims{1, 8, 8}, 0.1f)), dir / "v");
  EXPECT_TRUE(std::holds_alternative<OctVolume>(read_volume(dir / "v")));
}

TEST(BoundariesCsv, OrderingViolationOnRead) {
  const auto dir = scratch("csv_order");
  std::ofstream(dir / "b.csv") << "boundary,slice,column,depth\n"
                                << "ILM,0,0,3\nINL_LOWER,0,0,2\nRPE_UPPER,0,0,4\nBM,0,0,5\n";
  try {
    read_boundaries(dir / "b.csv", 8);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("slice 0, column 0"), std::string::npos) << e.what();
  }
}
