#pragma once

#include <algorithm>
#include <filesystem>
#include <set>
#include <string>

#include "json.hpp"

#include "interpdim/error.hpp"
#include "interpdim/harness.hpp"
#include "interpdim/text_io.hpp"

namespace interpdim {

// Experiment config JSON:
//
//   {
//     "embeddings": "glove.300d.txt.gz",
//     "case_fold": true, "normalize_vectors": false,
//     "frequency": "freq.tsv",                      (optional)
//     "models": ["seed", "fit", "fit+sw", "fit+sd", "fit+s", "freq", "random"],
//     "k": 5, "rng_seeds": [1, 2, 3],
//     "split_seed": 0, "resplit_per_seed": false,
//     "scramble_diagnostic": false,
//     "fit": {"defaults": {"learning_rate": 0.01}, "fit+s": {"alpha": 0.05}},
//     "conditions": [{"name": "animals/size", "category": "animals",
//                     "property": "size", "ratings": "...", "seeds": "..."}]
//   }
//
// Relative paths resolve against `base_dir`. Unknown keys are rejected.

namespace detail {

class ConfigReader {
 public:
  [[noreturn]] static void fail(const std::string& where, const std::string& what) {
    throw Error(ErrorKind::InvalidConfig, "at " + (where.empty() ? std::string("/") : where) + ": " + what);
  }

  static void only_keys(const nlohmann::json& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object()) fail(where, "expected an object");
    for (const auto& [key, value] : obj.items()) {
      if (!allowed.contains(key)) fail(where + "/" + key, "unknown key");
    }
  }

  static std::string string_at(const nlohmann::json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) fail(where + "/" + key, "missing");
    if (!obj[key].is_string()) fail(where + "/" + key, "expected a string");
    return obj[key].get<std::string>();
  }

  static double number_at(const nlohmann::json& obj, const std::string& key, const std::string& where) {
    if (!obj[key].is_number()) fail(where + "/" + key, "expected a number");
    return obj[key].get<double>();
  }

  static std::uint64_t unsigned_at(const nlohmann::json& obj, const std::string& key, const std::string& where) {
    if (!obj[key].is_number_unsigned()) fail(where + "/" + key, "expected a non-negative integer");
    return obj[key].get<std::uint64_t>();
  }

  static bool bool_at(const nlohmann::json& obj, const std::string& key, const std::string& where) {
    if (!obj[key].is_boolean()) fail(where + "/" + key, "expected a boolean");
    return obj[key].get<bool>();
  }

  static void apply_fit_overrides(const nlohmann::json& obj, const std::string& where, FitConfig& cfg) {
    only_keys(obj, where,
              {"alpha", "offset", "jitter", "learning_rate", "max_iters", "rel_tol", "average_seed_dims",
               "init_from_seed_dims", "step_halving"});
    if (obj.contains("alpha")) cfg.alpha = number_at(obj, "alpha", where);
    if (obj.contains("offset")) cfg.offset = number_at(obj, "offset", where);
    if (obj.contains("jitter")) {
      const auto& j = obj["jitter"];
      if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        fail(where + "/jitter", "expected [lo, hi]");
      }
      cfg.jitter_lo = j[0].get<double>();
      cfg.jitter_hi = j[1].get<double>();
    }
    if (obj.contains("learning_rate")) cfg.learning_rate = number_at(obj, "learning_rate", where);
    if (obj.contains("max_iters")) cfg.max_iters = unsigned_at(obj, "max_iters", where);
    if (obj.contains("rel_tol")) cfg.rel_tol = number_at(obj, "rel_tol", where);
    if (obj.contains("average_seed_dims")) cfg.average_seed_dims = bool_at(obj, "average_seed_dims", where);
    if (obj.contains("init_from_seed_dims")) cfg.init_from_seed_dims = bool_at(obj, "init_from_seed_dims", where);
    if (obj.contains("step_halving")) cfg.step_halving = bool_at(obj, "step_halving", where);
    try {
      cfg.validate();
    } catch (const Error& e) {
      fail(where, e.detail());
    }
  }
};

}  // namespace detail

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& doc,
                                                    const std::filesystem::path& base_dir = {}) {
  using R = detail::ConfigReader;
  R::only_keys(doc, "",
               {"embeddings", "case_fold", "normalize_vectors", "frequency", "models", "k", "rng_seeds",
                "split_seed", "resplit_per_seed", "scramble_diagnostic", "fit", "conditions"});
  const auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };

  ExperimentConfig cfg;
  cfg.embeddings = resolve(R::string_at(doc, "embeddings", ""));
  if (doc.contains("case_fold")) cfg.embedding_options.case_fold = R::bool_at(doc, "case_fold", "");
  if (doc.contains("normalize_vectors")) {
    cfg.embedding_options.normalize_vectors = R::bool_at(doc, "normalize_vectors", "");
  }
  if (doc.contains("frequency")) cfg.frequency = resolve(R::string_at(doc, "frequency", ""));

  if (doc.contains("models")) {
    if (!doc["models"].is_array() || doc["models"].empty()) R::fail("/models", "expected a nonempty array");
    cfg.models.clear();
    for (std::size_t i = 0; i < doc["models"].size(); ++i) {
      const auto& m = doc["models"][i];
      const std::string where = "/models/" + std::to_string(i);
      if (!m.is_string()) R::fail(where, "expected a model name");
      const auto kind = parse_model_kind(m.get<std::string>());
      if (!kind) R::fail(where, "unknown model '" + m.get<std::string>() + "'");
      if (std::find(cfg.models.begin(), cfg.models.end(), *kind) != cfg.models.end()) {
        R::fail(where, "duplicate model");
      }
      cfg.models.push_back(*kind);
    }
  }
  if (doc.contains("k")) {
    cfg.k = R::unsigned_at(doc, "k", "");
    if (cfg.k < 2) R::fail("/k", "must be at least 2");
  }
  if (doc.contains("rng_seeds")) {
    if (!doc["rng_seeds"].is_array() || doc["rng_seeds"].empty()) R::fail("/rng_seeds", "expected a nonempty array");
    cfg.rng_seeds.clear();
    for (std::size_t i = 0; i < doc["rng_seeds"].size(); ++i) {
      if (!doc["rng_seeds"][i].is_number_unsigned()) {
        R::fail("/rng_seeds/" + std::to_string(i), "expected a non-negative integer");
      }
      cfg.rng_seeds.push_back(doc["rng_seeds"][i].get<std::uint64_t>());
    }
  }
  if (doc.contains("split_seed")) cfg.split_seed = R::unsigned_at(doc, "split_seed", "");
  if (doc.contains("resplit_per_seed")) cfg.resplit_per_seed = R::bool_at(doc, "resplit_per_seed", "");
  if (doc.contains("scramble_diagnostic")) cfg.scramble_diagnostic = R::bool_at(doc, "scramble_diagnostic", "");

  if (doc.contains("fit")) {
    const auto& fit = doc["fit"];
    if (!fit.is_object()) R::fail("/fit", "expected an object");
    for (const auto& [key, value] : fit.items()) {
      if (key != "defaults" && !parse_model_tag(key)) R::fail("/fit/" + key, "unknown model");
    }
    for (ModelTag tag : kAllModelTags) {
      if (tag == ModelTag::Seed) continue;
      FitConfig model_cfg = default_fit_config(tag);
      if (fit.contains("defaults")) R::apply_fit_overrides(fit["defaults"], "/fit/defaults", model_cfg);
      for (const auto& [key, value] : fit.items()) {
        if (key != "defaults" && parse_model_tag(key) == tag) R::apply_fit_overrides(value, "/fit/" + key, model_cfg);
      }
      cfg.fit[static_cast<ModelKind>(static_cast<int>(tag))] = model_cfg;
    }
  }

  if (!doc.contains("conditions") || !doc["conditions"].is_array() || doc["conditions"].empty()) {
    R::fail("/conditions", "expected a nonempty array");
  }
  for (std::size_t i = 0; i < doc["conditions"].size(); ++i) {
    const auto& c = doc["conditions"][i];
    const std::string where = "/conditions/" + std::to_string(i);
    R::only_keys(c, where, {"name", "category", "property", "ratings", "seeds"});
    ConditionSpec spec;
    spec.ratings = resolve(R::string_at(c, "ratings", where));
    if (c.contains("seeds")) spec.seeds = resolve(R::string_at(c, "seeds", where));
    if (c.contains("category")) spec.condition.category = R::string_at(c, "category", where);
    if (c.contains("property")) spec.condition.property = R::string_at(c, "property", where);
    if (c.contains("name")) spec.name = R::string_at(c, "name", where);
    if (spec.name.empty()) spec.name = spec.condition.name();
    if (spec.name.empty()) spec.name = spec.ratings.stem().string();
    for (const auto& other : cfg.conditions) {
      if (other.name == spec.name) R::fail(where + "/name", "duplicate condition name '" + spec.name + "'");
    }
    cfg.conditions.push_back(std::move(spec));
  }
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  const std::string content = text::read_file(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(content);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::InvalidConfig,
                path.string() + ": byte " + std::to_string(e.byte) + ": " + e.what());
  }
  return experiment_config_from_json(doc, path.parent_path());
}

}  // namespace interpdim
