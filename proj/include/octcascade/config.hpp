#pragma once

// JSON (de)serialization of every configuration struct. Readers accept a
// subset of keys (missing keys keep their defaults) and reject unknown keys.

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "json.hpp"
#include "octcascade/cascade.hpp"
#include "octcascade/enface.hpp"
#include "octcascade/error.hpp"
#include "octcascade/layer_seg.hpp"
#include "octcascade/phantom.hpp"

namespace octcascade {

using nlohmann::json;

namespace detail {

inline void require_object(const json& j, std::string_view where,
                           std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected a JSON object");
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (auto key : keys) known = known || key == k;
    if (!known) throw ConfigError(std::string(where) + ": unknown key \"" + k + "\"");
  }
}

template <typename T>
void read_key(const json& j, const char* key, T& out, std::string_view where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(where) + "." + key + ": " + e.what());
  }
}

template <typename Enum, std::size_t N>
Enum enum_from(const std::string& s, const std::array<std::pair<Enum, const char*>, N>& table,
               std::string_view where) {
  for (const auto& [e, name] : table) {
    if (s == name) return e;
  }
  std::string names;
  for (const auto& [e, name] : table) names += (names.empty() ? "" : ", ") + std::string(name);
  throw ConfigError(std::string(where) + ": \"" + s + "\" is not one of " + names);
}

template <typename Enum, std::size_t N>
const char* enum_name(Enum v, const std::array<std::pair<Enum, const char*>, N>& table) {
  for (const auto& [e, name] : table) {
    if (e == v) return name;
  }
  return "?";
}

inline constexpr std::array<std::pair<CostKind, const char*>, 3> kCostNames{{
    {CostKind::NegativeVerticalGradient, "neg_gradient"},
    {CostKind::PositiveVerticalGradient, "pos_gradient"},
    {CostKind::NegativeIntensity, "neg_intensity"},
}};

inline constexpr std::array<std::pair<Anchor, const char*>, 5> kAnchorNames{{
    {Anchor::ImageFraction, "image"},
    {Anchor::Ilm, "ILM"},
    {Anchor::InlLower, "INL_LOWER"},
    {Anchor::RpeUpper, "RPE_UPPER"},
    {Anchor::Bm, "BM"},
}};

}  // namespace detail

// ---- phantom ----

inline json to_json(const PhantomConfig& c) {
  return {
      {"dims", {c.dims.slices, c.dims.height, c.dims.width}},
      {"n_vessels", c.n_vessels},
      {"vessel_radius", c.vessel_radius},
      {"depth_fraction", {c.depth_fraction_lo, c.depth_fraction_hi}},
      {"shadow_attenuation", c.shadow_attenuation},
      {"noise_sigma", c.noise_sigma},
      {"speckle_grain", c.speckle_grain},
      {"levels",
       {{"vitreous", c.levels.vitreous},
        {"inner", c.levels.inner},
        {"middle", c.levels.middle},
        {"rpe", c.levels.rpe},
        {"choroid", c.levels.choroid}}},
      {"vessel_level", c.vessel_level},
      {"seed", c.seed},
  };
}

inline PhantomConfig phantom_config_from_json(const json& j, PhantomConfig c = {}) {
  constexpr std::string_view where = "phantom";
  detail::require_object(j, where,
                         {"scale", "dims", "n_vessels", "vessel_radius", "depth_fraction",
                          "shadow_attenuation", "noise_sigma", "speckle_grain", "levels",
                          "vessel_level", "seed"});
  if (auto it = j.find("scale"); it != j.end()) {
    const auto s = it->get<std::string>();
    if (s == "desk") c.dims = default_config(PhantomScale::Desk).dims;
    else if (s == "paper") c.dims = default_config(PhantomScale::Paper, c.dims.slices).dims;
    else throw ConfigError("phantom.scale must be \"desk\" or \"paper\"");
  }
  if (auto it = j.find("dims"); it != j.end()) {
    if (!it->is_array() || it->size() != 3) throw ConfigError("phantom.dims must be [slices, height, width]");
    c.dims = Dims{(*it)[0].get<int>(), (*it)[1].get<int>(), (*it)[2].get<int>()};
  }
  detail::read_key(j, "n_vessels", c.n_vessels, where);
  detail::read_key(j, "vessel_radius", c.vessel_radius, where);
  if (auto it = j.find("depth_fraction"); it != j.end()) {
    if (!it->is_array() || it->size() != 2) throw ConfigError("phantom.depth_fraction must be [lo, hi]");
    c.depth_fraction_lo = (*it)[0].get<double>();
    c.depth_fraction_hi = (*it)[1].get<double>();
  }
  detail::read_key(j, "shadow_attenuation", c.shadow_attenuation, where);
  detail::read_key(j, "noise_sigma", c.noise_sigma, where);
  detail::read_key(j, "speckle_grain", c.speckle_grain, where);
  if (auto it = j.find("levels"); it != j.end()) {
    detail::require_object(*it, "phantom.levels", {"vitreous", "inner", "middle", "rpe", "choroid"});
    detail::read_key(*it, "vitreous", c.levels.vitreous, "phantom.levels");
    detail::read_key(*it, "inner", c.levels.inner, "phantom.levels");
    detail::read_key(*it, "middle", c.levels.middle, "phantom.levels");
    detail::read_key(*it, "rpe", c.levels.rpe, "phantom.levels");
    detail::read_key(*it, "choroid", c.levels.choroid, "phantom.levels");
  }
  detail::read_key(j, "vessel_level", c.vessel_level, where);
  detail::read_key(j, "seed", c.seed, where);
  c.validate();
  return c;
}

// ---- layer segmentation ----

inline json to_json(const DpConfig& c) {
  json out = json::object();
  for (Surface sf : kSurfaces) {
    const auto& t = c[sf];
    auto limit = [](const BandLimit& l) {
      return json{{"anchor", detail::enum_name(l.anchor, detail::kAnchorNames)}, {"offset", l.offset}};
    };
    out[std::string(surface_name(sf))] = {
        {"cost", detail::enum_name(t.cost, detail::kCostNames)},
        {"smoothness", t.path.smoothness},
        {"max_jump", t.path.max_jump},
        {"band_lo", limit(t.band.lo)},
        {"band_hi", limit(t.band.hi)},
    };
  }
  return out;
}

inline DpConfig dp_config_from_json(const json& j, DpConfig c = default_dp_config()) {
  detail::require_object(j, "dp", {"ILM", "INL_LOWER", "RPE_UPPER", "BM"});
  for (Surface sf : kSurfaces) {
    auto it = j.find(std::string(surface_name(sf)));
    if (it == j.end()) continue;
    const std::string where = "dp." + std::string(surface_name(sf));
    detail::require_object(*it, where, {"cost", "smoothness", "max_jump", "band_lo", "band_hi"});
    auto& t = c[sf];
    if (auto k = it->find("cost"); k != it->end()) {
      t.cost = detail::enum_from(k->get<std::string>(), detail::kCostNames, where + ".cost");
    }
    detail::read_key(*it, "smoothness", t.path.smoothness, where);
    detail::read_key(*it, "max_jump", t.path.max_jump, where);
    for (auto [key, limit] : {std::pair{"band_lo", &t.band.lo}, std::pair{"band_hi", &t.band.hi}}) {
      auto b = it->find(key);
      if (b == it->end()) continue;
      const std::string lw = where + "." + key;
      detail::require_object(*b, lw, {"anchor", "offset"});
      if (auto a = b->find("anchor"); a != b->end()) {
        limit->anchor = detail::enum_from(a->get<std::string>(), detail::kAnchorNames, lw + ".anchor");
      }
      detail::read_key(*b, "offset", limit->offset, lw);
    }
  }
  c.validate();
  return c;
}

// ---- shadows ----

inline json to_json(const ShadowConfig& c) {
  return {{"window_slices", c.window_slices},
          {"window_cols", c.window_cols},
          {"threshold", c.threshold},
          {"min_component_px", c.min_component_px},
          {"dilation_radius", c.dilation_radius}};
}

inline ShadowConfig shadow_config_from_json(const json& j, ShadowConfig c = {}) {
  constexpr std::string_view where = "shadow";
  detail::require_object(j, where,
                         {"window_slices", "window_cols", "threshold", "min_component_px",
                          "dilation_radius"});
  detail::read_key(j, "window_slices", c.window_slices, where);
  detail::read_key(j, "window_cols", c.window_cols, where);
  detail::read_key(j, "threshold", c.threshold, where);
  detail::read_key(j, "min_component_px", c.min_component_px, where);
  detail::read_key(j, "dilation_radius", c.dilation_radius, where);
  c.validate();
  return c;
}

// ---- cascade ----

inline json to_json(const InfusionConfig& c) {
  return {{"use_longitudinal", c.use_longitudinal},
          {"use_transverse", c.use_transverse},
          {"transverse_dilation", c.transverse_dilation},
          {"binarize_threshold", c.binarize_threshold},
          {"min_component_vox", c.min_component_vox},
          {"connectivity", c.connectivity}};
}

inline InfusionConfig infusion_config_from_json(const json& j, InfusionConfig c = {}) {
  constexpr std::string_view where = "infusion";
  detail::require_object(j, where,
                         {"use_longitudinal", "use_transverse", "transverse_dilation",
                          "binarize_threshold", "min_component_vox", "connectivity"});
  detail::read_key(j, "use_longitudinal", c.use_longitudinal, where);
  detail::read_key(j, "use_transverse", c.use_transverse, where);
  detail::read_key(j, "transverse_dilation", c.transverse_dilation, where);
  detail::read_key(j, "binarize_threshold", c.binarize_threshold, where);
  detail::read_key(j, "min_component_vox", c.min_component_vox, where);
  detail::read_key(j, "connectivity", c.connectivity, where);
  c.validate();
  return c;
}

inline json to_json(const VesselBackendConfig& c) {
  json j{{"kind", c.kind == VesselBackendConfig::Kind::Import ? "import" : "classical"},
         {"w_intensity", c.w_intensity},
         {"w_shadow", c.w_shadow}};
  if (!c.import_path.empty()) j["path"] = c.import_path.string();
  return j;
}

inline VesselBackendConfig backend_config_from_json(const json& j, VesselBackendConfig c = {}) {
  constexpr std::string_view where = "backend";
  detail::require_object(j, where, {"kind", "path", "w_intensity", "w_shadow"});
  if (auto it = j.find("kind"); it != j.end()) {
    const auto k = it->get<std::string>();
    if (k == "classical") c.kind = VesselBackendConfig::Kind::Classical;
    else if (k == "import") c.kind = VesselBackendConfig::Kind::Import;
    else throw ConfigError("backend.kind must be \"classical\" or \"import\"");
  }
  std::string path;
  detail::read_key(j, "path", path, where);
  if (!path.empty()) c.import_path = path;
  detail::read_key(j, "w_intensity", c.w_intensity, where);
  detail::read_key(j, "w_shadow", c.w_shadow, where);
  c.validate();
  return c;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace octcascade
