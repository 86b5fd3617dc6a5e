#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "interpdim/dimensions.hpp"
#include "interpdim/error.hpp"
#include "interpdim/text_io.hpp"

namespace interpdim {

// {model_tag, property, direction, c, b, config_digest}; c and b are null
// for SEED. Doubles are written with round-trip precision.
inline nlohmann::json dimension_to_json(const Dimension& dim) {
  nlohmann::json j;
  j["model_tag"] = std::string(to_string(dim.model));
  j["property"] = dim.property;
  j["direction"] = dim.direction;
  j["c"] = dim.scale ? nlohmann::json(*dim.scale) : nlohmann::json(nullptr);
  j["b"] = dim.bias ? nlohmann::json(*dim.bias) : nlohmann::json(nullptr);
  j["config_digest"] = dim.config_digest;
  return j;
}

inline Dimension dimension_from_json(const nlohmann::json& j) {
  const auto bad = [](const std::string& what) -> Dimension {
    throw Error(ErrorKind::InvalidConfig, "dimension document: " + what);
  };
  if (!j.is_object()) return bad("not an object");
  Dimension dim;
  if (!j.contains("model_tag") || !j["model_tag"].is_string()) return bad("missing model_tag");
  const auto tag = parse_model_tag(j["model_tag"].get<std::string>());
  if (!tag) return bad("unknown model_tag '" + j["model_tag"].get<std::string>() + "'");
  dim.model = *tag;
  if (j.contains("property") && j["property"].is_string()) dim.property = j["property"].get<std::string>();
  if (!j.contains("direction") || !j["direction"].is_array()) return bad("missing direction");
  for (const auto& x : j["direction"]) {
    if (!x.is_number()) return bad("direction must hold numbers");
    dim.direction.push_back(x.get<double>());
  }
  for (const char* key : {"c", "b"}) {
    if (j.contains(key) && !j[key].is_null() && !j[key].is_number()) {
      return bad(std::string(key) + " must be a number or null");
    }
  }
  if (j.contains("c") && j["c"].is_number()) dim.scale = j["c"].get<double>();
  if (j.contains("b") && j["b"].is_number()) dim.bias = j["b"].get<double>();
  if (j.contains("config_digest") && j["config_digest"].is_string()) {
    dim.config_digest = j["config_digest"].get<std::string>();
  }
  dim.validate();
  return dim;
}

inline void save_dimension(const std::filesystem::path& path, const Dimension& dim) {
  text::write_file(path, dimension_to_json(dim).dump(2) + "\n");
}

inline Dimension load_dimension(const std::filesystem::path& path) {
  const std::string content = text::read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(content);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::InvalidConfig, path.string() + ": " + e.what());
  }
  return dimension_from_json(j);
}

}  // namespace interpdim
