#pragma once

// Volume container: <name>.json header + <name>.raw little-endian payload,
// slice-major then depth then column. float32 for intensities, probabilities
// and en-face planes; one 0/1 byte per element for masks.

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "json.hpp"
#include "octcascade/error.hpp"
#include "octcascade/grid.hpp"
#include "octcascade/types.hpp"

namespace octcascade {

namespace fs = std::filesystem;

enum class PayloadKind { Intensity, Probability, Mask, Plane, PlaneMask };

inline const char* payload_kind_name(PayloadKind k) {
  switch (k) {
    case PayloadKind::Intensity: return "intensity";
    case PayloadKind::Probability: return "probability";
    case PayloadKind::Mask: return "mask";
    case PayloadKind::Plane: return "plane";
    case PayloadKind::PlaneMask: return "plane_mask";
  }
  return "?";
}

namespace detail {

struct ContainerPaths {
  fs::path header;
  fs::path payload;
};

inline ContainerPaths container_paths(const fs::path& path) {
  fs::path base = path;
  if (base.extension() == ".json" || base.extension() == ".raw") base.replace_extension();
  fs::path header = base;
  header += ".json";
  fs::path payload = base;
  payload += ".raw";
  return {header, payload};
}

inline bool is_float_kind(PayloadKind k) {
  return k == PayloadKind::Intensity || k == PayloadKind::Probability || k == PayloadKind::Plane;
}

inline std::optional<PayloadKind> parse_kind(const std::string& s) {
  for (auto k : {PayloadKind::Intensity, PayloadKind::Probability, PayloadKind::Mask,
                 PayloadKind::Plane, PayloadKind::PlaneMask}) {
    if (s == payload_kind_name(k)) return k;
  }
  return std::nullopt;
}

inline void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + p.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + p.string());
}

inline std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + p.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline std::string encode_f32(std::span<const float> v) {
  std::string out(v.size() * 4, '\0');
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto u = std::bit_cast<std::uint32_t>(v[i]);
    out[4 * i + 0] = static_cast<char>(u & 0xFFu);
    out[4 * i + 1] = static_cast<char>((u >> 8) & 0xFFu);
    out[4 * i + 2] = static_cast<char>((u >> 16) & 0xFFu);
    out[4 * i + 3] = static_cast<char>((u >> 24) & 0xFFu);
  }
  return out;
}

inline std::vector<float> decode_f32(const std::string& bytes) {
  std::vector<float> v(bytes.size() / 4);
  const auto* b = reinterpret_cast<const unsigned char*>(bytes.data());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::uint32_t u = std::uint32_t{b[4 * i]} | (std::uint32_t{b[4 * i + 1]} << 8) |
                            (std::uint32_t{b[4 * i + 2]} << 16) |
                            (std::uint32_t{b[4 * i + 3]} << 24);
    v[i] = std::bit_cast<float>(u);
  }
  return v;
}

inline void write_container(const fs::path& path, PayloadKind kind, std::vector<int> dims,
                            const std::string& payload, const std::optional<Spacing>& spacing) {
  const auto paths = container_paths(path);
  nlohmann::json h;
  h["format"] = "octcascade-volume";
  h["version"] = 1;
  h["kind"] = payload_kind_name(kind);
  h["dims"] = dims;
  h["element_type"] = is_float_kind(kind) ? "float32" : "uint8";
  h["byte_order"] = "little";
  h["payload"] = paths.payload.filename().string();
  if (spacing) {
    h["spacing_um"] = {spacing->dy, spacing->dz, spacing->dx};
  } else {
    h["spacing_um"] = nullptr;
  }
  write_bytes(paths.header, h.dump(2) + "\n");
  write_bytes(paths.payload, payload);
}

struct RawContainer {
  PayloadKind kind;
  std::vector<int> dims;
  std::optional<Spacing> spacing;
  std::string payload;
  std::string source;

  std::size_t elements() const {
    std::size_t n = 1;
    for (int d : dims) n *= static_cast<std::size_t>(d);
    return n;
  }
};

inline RawContainer read_container(const fs::path& path) {
  const auto paths = container_paths(path);
  RawContainer c;
  c.source = paths.header.string();
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(read_bytes(paths.header));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptFileError("unreadable header " + c.source + ": " + e.what());
  }
  try {
    const auto kind = parse_kind(h.at("kind").get<std::string>());
    if (!kind) throw CorruptFileError("unknown payload kind in " + c.source);
    c.kind = *kind;
    c.dims = h.at("dims").get<std::vector<int>>();
    const auto et = h.at("element_type").get<std::string>();
    if (et != (is_float_kind(c.kind) ? "float32" : "uint8")) {
      throw CorruptFileError("element type " + et + " does not fit kind in " + c.source);
    }
    if (h.at("byte_order").get<std::string>() != "little") {
      throw CorruptFileError("unsupported byte order in " + c.source);
    }
    if (h.contains("spacing_um") && !h["spacing_um"].is_null()) {
      const auto sp = h["spacing_um"].get<std::vector<double>>();
      if (sp.size() != 3) throw CorruptFileError("spacing must have 3 entries in " + c.source);
      c.spacing = Spacing{sp[0], sp[1], sp[2]};
    }
  } catch (const nlohmann::json::exception& e) {
    throw CorruptFileError("malformed header " + c.source + ": " + e.what());
  }
  const std::size_t rank =
      (c.kind == PayloadKind::Plane || c.kind == PayloadKind::PlaneMask) ? 2 : 3;
  if (c.dims.size() != rank ||
      std::any_of(c.dims.begin(), c.dims.end(), [](int d) { return d < 0; })) {
    throw CorruptFileError("bad dims in " + c.source);
  }
  fs::path payload = paths.payload;
  if (h.contains("payload")) payload = paths.header.parent_path() / h["payload"].get<std::string>();
  c.payload = read_bytes(payload);
  const std::size_t width = is_float_kind(c.kind) ? 4 : 1;
  if (c.payload.size() != c.elements() * width) {
    throw CorruptFileError("payload " + payload.string() + " has " +
                           std::to_string(c.payload.size()) + " bytes, dims need " +
                           std::to_string(c.elements() * width));
  }
  return c;
}

inline RawContainer read_expecting(const fs::path& path, PayloadKind kind) {
  auto c = read_container(path);
  if (c.kind != kind) {
    throw ValidationError(c.source + " holds " + payload_kind_name(c.kind) + ", expected " +
                          payload_kind_name(kind));
  }
  return c;
}

inline std::vector<std::uint8_t> as_u8(const std::string& s) {
  return std::vector<std::uint8_t>(s.begin(), s.end());
}

inline std::string from_u8(std::span<const std::uint8_t> v) {
  return std::string(v.begin(), v.end());
}

inline Dims dims3(const std::vector<int>& d) { return Dims{d[0], d[1], d[2]}; }

}  // namespace detail

// ---- writers ---------------------------------------------------------------

inline void write_volume(const OctVolume& v, const fs::path& path) {
  const Dims& d = v.dims();
  detail::write_container(path, PayloadKind::Intensity, {d.slices, d.height, d.width},
                          detail::encode_f32(v.grid().values()), v.spacing());
}

inline void write_volume(const ProbabilityMap3D& p, const fs::path& path) {
  const Dims& d = p.dims();
  detail::write_container(path, PayloadKind::Probability, {d.slices, d.height, d.width},
                          detail::encode_f32(p.grid().values()), std::nullopt);
}

inline void write_volume(const VoxelMask& m, const fs::path& path) {
  const Dims& d = m.dims();
  detail::write_container(path, PayloadKind::Mask, {d.slices, d.height, d.width},
                          detail::from_u8(m.grid().values()), std::nullopt);
}

inline void write_plane(const Grid2<float>& g, const fs::path& path) {
  detail::require_unit_range(g.values(), Dims{1, g.rows(), g.cols()}, "plane");
  detail::write_container(path, PayloadKind::Plane, {g.rows(), g.cols()},
                          detail::encode_f32(g.values()), std::nullopt);
}

inline void write_plane(const EnFaceImage& e, const fs::path& path) { write_plane(e.grid(), path); }

inline void write_plane(const PixelMask& m, const fs::path& path) {
  const auto& g = m.grid();
  detail::write_container(path, PayloadKind::PlaneMask, {g.rows(), g.cols()},
                          detail::from_u8(g.values()), std::nullopt);
}

// ---- readers ---------------------------------------------------------------

using AnyVolume = std::variant<OctVolume, VoxelMask, ProbabilityMap3D>;

inline AnyVolume read_volume(const fs::path& path) {
  auto c = detail::read_container(path);
  switch (c.kind) {
    case PayloadKind::Intensity:
      return OctVolume(Grid3<float>(detail::dims3(c.dims), detail::decode_f32(c.payload)),
                       c.spacing);
    case PayloadKind::Probability:
      return ProbabilityMap3D(
          Grid3<float>(detail::dims3(c.dims), detail::decode_f32(c.payload)));
    case PayloadKind::Mask:
      return VoxelMask(Grid3<std::uint8_t>(detail::dims3(c.dims), detail::as_u8(c.payload)));
    default:
      throw ValidationError(c.source + " is a 2D plane, not a volume");
  }
}

inline OctVolume read_oct_volume(const fs::path& path) {
  auto c = detail::read_expecting(path, PayloadKind::Intensity);
  return OctVolume(Grid3<float>(detail::dims3(c.dims), detail::decode_f32(c.payload)), c.spacing);
}

inline ProbabilityMap3D read_probability_map(const fs::path& path) {
  auto c = detail::read_expecting(path, PayloadKind::Probability);
  return ProbabilityMap3D(Grid3<float>(detail::dims3(c.dims), detail::decode_f32(c.payload)));
}

inline VoxelMask read_voxel_mask(const fs::path& path) {
  auto c = detail::read_expecting(path, PayloadKind::Mask);
  return VoxelMask(Grid3<std::uint8_t>(detail::dims3(c.dims), detail::as_u8(c.payload)));
}

inline Grid2<float> read_plane(const fs::path& path) {
  auto c = detail::read_expecting(path, PayloadKind::Plane);
  Grid2<float> g(c.dims[0], c.dims[1], detail::decode_f32(c.payload));
  detail::require_unit_range(g.values(), Dims{1, g.rows(), g.cols()}, "plane");
  return g;
}

inline EnFaceImage read_enface(const fs::path& path) { return EnFaceImage(read_plane(path)); }

inline PixelMask read_pixel_mask(const fs::path& path) {
  auto c = detail::read_expecting(path, PayloadKind::PlaneMask);
  return PixelMask(Grid2<std::uint8_t>(c.dims[0], c.dims[1], detail::as_u8(c.payload)));
}

// ---- boundaries CSV ----------------------------------------------------------

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw IoError("cannot format value");
  return std::string(buf, end);
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

template <typename T>
T parse_number(const std::string& s, const std::string& where) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw CorruptFileError("bad number '" + s + "' in " + where);
  }
  return v;
}

}  // namespace detail

/// CSV with header `boundary,slice,column,depth`, one row per surface sample.
inline std::string boundaries_to_csv(const BoundarySet& b) {
  std::string out = "boundary,slice,column,depth\n";
  for (Surface sf : kSurfaces) {
    for (int s = 0; s < b.slices(); ++s) {
      for (int x = 0; x < b.width(); ++x) {
        out += surface_name(sf);
        out += ',' + std::to_string(s) + ',' + std::to_string(x) + ',' +
               detail::format_double(b(sf, s, x)) + '\n';
      }
    }
  }
  return out;
}

inline void write_boundaries(const BoundarySet& b, const fs::path& path) {
  detail::write_bytes(path, boundaries_to_csv(b));
}

/// Parses a boundaries CSV. Without `height`, the depth extent is taken as
/// the smallest that contains every BM sample; shape against a concrete
/// volume is checked at the use site via BoundarySet::require_matches.
inline BoundarySet read_boundaries(const fs::path& path, std::optional<int> height = std::nullopt) {
  std::istringstream in(detail::read_bytes(path));
  const std::string where = path.string();
  std::string line;
  if (!std::getline(in, line) || detail::split_csv(line) !=
                                     std::vector<std::string>{"boundary", "slice", "column", "depth"}) {
    throw CorruptFileError("missing boundaries header in " + where);
  }
  std::map<std::tuple<int, int, int>, double> samples;
  int slices = 0;
  int width = 0;
  double deepest = 0.0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split_csv(line);
    const std::string at = where + ":" + std::to_string(line_no);
    if (f.size() != 4) throw CorruptFileError("expected 4 fields at " + at);
    const auto sf = parse_surface(f[0]);
    if (!sf) throw CorruptFileError("unknown boundary '" + f[0] + "' at " + at);
    const int s = detail::parse_number<int>(f[1], at);
    const int x = detail::parse_number<int>(f[2], at);
    const double d = detail::parse_number<double>(f[3], at);
    if (s < 0 || x < 0) throw CorruptFileError("negative index at " + at);
    if (!samples.emplace(std::tuple{static_cast<int>(*sf), s, x}, d).second) {
      throw CorruptFileError("duplicate sample at " + at);
    }
    slices = std::max(slices, s + 1);
    width = std::max(width, x + 1);
    if (*sf == Surface::Bm && std::isfinite(d)) deepest = std::max(deepest, d);
  }
  const std::size_t expected = 4u * static_cast<std::size_t>(slices) * width;
  BoundarySet::Surfaces planes;
  for (auto& p : planes) p = Grid2<double>(slices, width, 0.0);
  for (const auto& [key, d] : samples) {
    planes[std::get<0>(key)](std::get<1>(key), std::get<2>(key)) = d;
  }
  if (samples.size() != expected || slices == 0) {
    std::string missing;
    for (Surface sf : kSurfaces) {
      std::size_t n = 0;
      for (const auto& [key, d] : samples) n += std::get<0>(key) == static_cast<int>(sf);
      if (n != static_cast<std::size_t>(slices) * width) {
        missing += (missing.empty() ? "" : ", ") + std::string(surface_name(sf));
      }
    }
    throw IncompleteSetError("boundary set in " + where + " is incomplete; missing rows for " +
                             (missing.empty() ? std::string("some surface") : missing));
  }
  const int h = height ? *height : static_cast<int>(std::floor(deepest)) + 1;
  return BoundarySet(std::move(planes), std::max(h, 1));
}

// ---- PGM -------------------------------------------------------------------

/// Binary 8-bit PGM (P5).
inline void write_pgm(const Grid2<std::uint8_t>& img, const fs::path& path) {
  std::string out = "P5\n" + std::to_string(img.cols()) + " " + std::to_string(img.rows()) +
                    "\n255\n";
  out.append(img.values().begin(), img.values().end());
  detail::write_bytes(path, out);
}

inline Grid2<std::uint8_t> to_gray(const Grid2<float>& g) {
  Grid2<std::uint8_t> out(g.rows(), g.cols());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double v = std::clamp(static_cast<double>(g[i]), 0.0, 1.0);
    out[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  return out;
}

inline Grid2<std::uint8_t> to_gray(const PixelMask& m) {
  Grid2<std::uint8_t> out(m.slices(), m.width());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = m.grid()[i] ? 255 : 0;
  return out;
}

}  // namespace octcascade
