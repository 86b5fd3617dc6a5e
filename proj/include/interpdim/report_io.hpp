#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "json.hpp"

#include "interpdim/harness.hpp"
#include "interpdim/text_io.hpp"

namespace interpdim {

namespace detail {

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string csv_number(double x) { return std::isfinite(x) ? text::format_double(x) : std::string(); }

inline nlohmann::json json_number(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

}  // namespace detail

/// One row per (model, condition, seed, fold).
inline std::string runs_csv(const EvalReport& report) {
  std::string out = "model,condition,rng_seed,fold,n_train,n_test,r_plus_acc,mse,train_loss,status,error\n";
  for (const auto& r : report.runs) {
    out += std::string(to_string(r.model)) + ',' + detail::csv_field(r.condition) + ',' +
           std::to_string(r.rng_seed) + ',' + std::to_string(r.fold) + ',' + std::to_string(r.n_train) + ',' +
           std::to_string(r.n_test) + ',' + (r.ok ? detail::csv_number(r.r_plus_acc) : "") + ',' +
           (r.ok ? detail::csv_number(r.mse) : "") + ',' + (r.train_loss ? detail::csv_number(*r.train_loss) : "") +
           ',' + (r.ok ? "ok" : "error") + ',' + detail::csv_field(r.error) + '\n';
  }
  return out;
}

/// Per-(model, condition) rows followed by one `global` row per model.
inline std::string summary_csv(const EvalReport& report) {
  std::string out = "scope,model,condition,mean_r_plus_acc,stderr_r_plus_acc,median_mse,runs,errors\n";
  for (const auto& s : report.per_condition) {
    out += "condition," + std::string(to_string(s.model)) + ',' + detail::csv_field(s.condition) + ',' +
           detail::csv_number(s.mean_r_plus_acc) + ',' + detail::csv_number(s.stderr_r_plus_acc) + ',' +
           detail::csv_number(s.median_mse) + ',' + std::to_string(s.runs) + ',' + std::to_string(s.errors) + '\n';
  }
  for (const auto& g : report.global) {
    out += "global," + std::string(to_string(g.model)) + ",," + detail::csv_number(g.mean_r_plus_acc) + ',' +
           detail::csv_number(g.stderr_r_plus_acc) + ',' + detail::csv_number(g.median_mse) + ',' +
           std::to_string(g.conditions) + ",\n";
  }
  return out;
}

inline nlohmann::json report_to_json(const ExperimentResult& result) {
  const EvalReport& report = result.report;
  nlohmann::json j;
  j["per_condition"] = nlohmann::json::array();
  for (const auto& s : report.per_condition) {
    nlohmann::json row;
    row["model"] = std::string(to_string(s.model));
    row["condition"] = s.condition;
    row["mean_r_plus_acc"] = detail::json_number(s.mean_r_plus_acc);
    row["stderr_r_plus_acc"] = detail::json_number(s.stderr_r_plus_acc);
    row["median_mse"] = detail::json_number(s.median_mse);
    row["runs"] = s.runs;
    row["errors"] = s.errors;
    row["r_plus_acc_runs"] = s.r_plus_acc_runs;
    row["mse_runs"] = s.mse_runs;
    j["per_condition"].push_back(row);
  }
  j["global"] = nlohmann::json::array();
  for (const auto& g : report.global) {
    j["global"].push_back({{"model", std::string(to_string(g.model))},
                           {"mean_r_plus_acc", detail::json_number(g.mean_r_plus_acc)},
                           {"stderr_r_plus_acc", detail::json_number(g.stderr_r_plus_acc)},
                           {"median_mse", detail::json_number(g.median_mse)},
                           {"conditions", g.conditions}});
  }
  j["runs"] = nlohmann::json::array();
  for (const auto& r : report.runs) {
    nlohmann::json row{{"model", std::string(to_string(r.model))},
                       {"condition", r.condition},
                       {"rng_seed", r.rng_seed},
                       {"fold", r.fold},
                       {"n_train", r.n_train},
                       {"n_test", r.n_test},
                       {"ok", r.ok}};
    if (r.ok) {
      row["r_plus_acc"] = detail::json_number(r.r_plus_acc);
      row["mse"] = detail::json_number(r.mse);
    } else {
      row["error"] = r.error;
    }
    if (r.train_loss) row["train_loss"] = detail::json_number(*r.train_loss);
    j["runs"].push_back(row);
  }
  j["scramble_diagnostic"] = nlohmann::json::array();
  for (const auto& d : result.scramble) {
    j["scramble_diagnostic"].push_back({{"condition", d.condition},
                                        {"train_loss_real", detail::json_number(d.train_loss_real)},
                                        {"train_loss_scrambled", detail::json_number(d.train_loss_scrambled)},
                                        {"gold_scale_loss_real", detail::json_number(d.real.gold_scale_loss)},
                                        {"gold_scale_loss_scrambled", detail::json_number(d.scrambled.gold_scale_loss)},
                                        {"degenerate_real", d.real.degenerate},
                                        {"degenerate_scrambled", d.scrambled.degenerate}});
  }
  j["warnings"] = result.warnings;
  return j;
}

}  // namespace interpdim
