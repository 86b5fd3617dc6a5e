// interpdim: build interpretable dimensions, evaluate them under cross
// validation, and emit prediction / projection CSVs.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "interpdim/interpdim.hpp"

namespace fs = std::filesystem;
using namespace interpdim;

namespace {

enum class LogLevel { Error, Warn, Info, Debug };

struct Globals {
  LogLevel level = LogLevel::Warn;
  unsigned threads = 1;
};

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

void log(const Globals& g, LogLevel level, const std::string& message) {
  if (level > g.level) return;
  static constexpr const char* names[] = {"error", "warn", "info", "debug"};
  std::cerr << "[" << names[static_cast<int>(level)] << "] " << message << "\n";
}

int report_error(const std::string& kind, const std::string& message, std::optional<std::size_t> line, int code) {
  nlohmann::json j{{"error", kind}, {"message", message}};
  if (line) j["line"] = *line;
  std::cerr << j.dump() << "\n";
  return code;
}

int report_error(const Error& e) {
  const int code = e.kind() == ErrorKind::InvalidConfig ? kExitUsage : kExitFailure;
  return report_error(std::string(to_string(e.kind())), e.what(), e.line(), code);
}

int usage_error(const std::string& message) { return report_error("Usage", message, std::nullopt, kExitUsage); }

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
  } else {
    text::write_file(path, content);
  }
}

struct FitArgs {
  std::string model;
  std::string embeddings;
  std::string ratings;
  std::string seeds;
  std::string out;
  std::string category;
  std::string property;
  std::optional<double> alpha;
  std::optional<double> offset;
  std::optional<double> learning_rate;
  std::optional<std::size_t> max_iters;
  std::uint64_t rng_seed = 0;
  bool no_case_fold = false;
};

int cmd_fit(const Globals& g, const FitArgs& a) {
  const auto tag = parse_model_tag(a.model);
  if (!tag) return usage_error("unknown --model '" + a.model + "'");
  if (*tag != ModelTag::Fit && a.seeds.empty()) return usage_error("--model " + a.model + " requires --seeds");
  if (*tag != ModelTag::Seed && a.ratings.empty()) return usage_error("--model " + a.model + " requires --ratings");

  FitConfig cfg = default_fit_config(*tag);
  if (a.alpha) cfg.alpha = *a.alpha;
  if (a.offset) cfg.offset = *a.offset;
  if (a.learning_rate) cfg.learning_rate = *a.learning_rate;
  if (a.max_iters) cfg.max_iters = *a.max_iters;
  cfg.rng_seed = a.rng_seed;
  try {
    cfg.validate();
  } catch (const Error& e) {
    return usage_error(e.detail());
  }

  const EmbeddingStore store = load_embeddings(a.embeddings, {.case_fold = !a.no_case_fold});
  for (const auto& w : store.warnings()) log(g, LogLevel::Warn, "embeddings: " + w);

  std::optional<SeedLexicon> lexicon;
  if (!a.seeds.empty()) lexicon = load_seed_lexicon(a.seeds, a.property);

  TrainingSet train(store.dim());
  if (!a.ratings.empty()) {
    const Condition condition{a.category, a.property};
    auto filtered = filter_to_vocabulary(load_ratings(a.ratings, condition), store);
    if (!filtered.dropped.empty()) {
      log(g, LogLevel::Warn, "dropped " + std::to_string(filtered.dropped.size()) + " rating word(s) missing from the embeddings");
    }
    const auto dataset = zscore(filtered.dataset);
    train = make_training_set(dataset, store);
  }

  const auto result = build_model(*tag, train, lexicon ? &*lexicon : nullptr, store, cfg);
  Dimension dim = result.dimension;
  if (dim.property.empty()) dim.property = a.property;
  if (is_fitted(*tag)) {
    log(g, LogLevel::Info, "iterations=" + std::to_string(result.trace.iterations) +
                               " final_loss=" + text::format_double(result.trace.final_loss) +
                               " converged=" + (result.trace.converged ? "true" : "false"));
  }
  write_output(a.out, dimension_to_json(dim).dump(2) + "\n");
  return kExitOk;
}

int cmd_eval(const Globals& g, const std::string& config_path, const std::string& out_dir) {
  const ExperimentConfig config = load_experiment_config(config_path);
  const auto result = run_experiment(config, g.threads);
  for (const auto& w : result.warnings) log(g, LogLevel::Warn, w);
  fs::create_directories(out_dir);
  text::write_file(fs::path(out_dir) / "runs.csv", runs_csv(result.report));
  text::write_file(fs::path(out_dir) / "summary.csv", summary_csv(result.report));
  text::write_file(fs::path(out_dir) / "report.json", report_to_json(result).dump(2) + "\n");
  std::size_t errors = 0;
  for (const auto& r : result.report.runs) errors += r.ok ? 0 : 1;
  log(g, LogLevel::Info, std::to_string(result.report.runs.size()) + " runs, " + std::to_string(errors) + " failed");
  return kExitOk;
}

int cmd_project(const Globals& g, const std::string& embeddings, const std::string& ratings,
                const std::vector<std::string>& dimension_files, bool no_case_fold, const std::string& out) {
  const EmbeddingStore store = load_embeddings(embeddings, {.case_fold = !no_case_fold});
  auto filtered = filter_to_vocabulary(load_ratings(ratings, {}), store);
  if (!filtered.dropped.empty()) {
    log(g, LogLevel::Warn, "dropped " + std::to_string(filtered.dropped.size()) + " word(s) missing from the embeddings");
  }
  std::vector<std::string> words;
  std::vector<std::optional<double>> golds;
  for (const auto& row : filtered.dataset.rows) {
    words.push_back(row.word);
    golds.emplace_back(row.gold);
  }
  std::vector<LabeledDimension> dims;
  for (const auto& path : dimension_files) {
    Dimension d = load_dimension(path);
    std::string label = std::string(to_string(d.model));
    if (!d.property.empty()) label += ":" + d.property;
    dims.push_back({label, std::move(d)});
  }
  const auto projection = project_words(words, golds, store, dims);
  if (projection.rank_deficient) log(g, LogLevel::Warn, "covariance has rank < 2; second axis is arbitrary");
  write_output(out, projection_csv(projection));
  return kExitOk;
}

int cmd_predict(const Globals& g, const std::string& embeddings, const std::string& dimension_path,
                const std::string& words_path, bool no_case_fold, const std::string& out) {
  const EmbeddingStore store = load_embeddings(embeddings, {.case_fold = !no_case_fold});
  const Dimension dim = load_dimension(dimension_path);
  if (dim.direction.size() != store.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "dimension has " + std::to_string(dim.direction.size()) +
                                                  " components, embeddings have " + std::to_string(store.dim()));
  }
  std::vector<std::pair<std::string, double>> scored;
  std::vector<std::string> absent;
  const std::string word_list = text::read_file(words_path);
  for (const auto line : text::split_lines(word_list)) {
    const auto word = text::trim(line);
    if (word.empty() || word.front() == '#') continue;
    if (const auto v = store.lookup(word)) {
      scored.emplace_back(std::string(word), predict_rating(*v, dim));
    } else {
      absent.emplace_back(word);
    }
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::string csv = "word,score,status\n";
  for (const auto& [word, score] : scored) csv += word + "," + text::format_double(score) + ",OK\n";
  for (const auto& word : absent) csv += word + ",,ABSENT\n";
  if (!absent.empty()) log(g, LogLevel::Warn, std::to_string(absent.size()) + " word(s) absent from the embeddings");
  write_output(out, csv);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interpretable dimensions in word embedding spaces"};
  app.require_subcommand(1);

  Globals globals;
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "error, warn, info or debug")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}));
  app.add_option("--threads", globals.threads, "Worker threads for evaluation runs")->check(CLI::PositiveNumber);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Build one dimension and write it as JSON");
  fit_cmd->add_option("--model", fit.model, "seed, fit, fit+sw, fit+sd or fit+s")->required();
  fit_cmd->add_option("--embeddings", fit.embeddings, "Text vector file (.gz ok)")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--ratings", fit.ratings, "word,rating CSV")->check(CLI::ExistingFile);
  fit_cmd->add_option("--seeds", fit.seeds, "negative,positive seed CSV")->check(CLI::ExistingFile);
  fit_cmd->add_option("--out", fit.out, "Output JSON path (default stdout)");
  fit_cmd->add_option("--category", fit.category);
  fit_cmd->add_option("--property", fit.property);
  fit_cmd->add_option("--alpha", fit.alpha, "Weight of the ratings loss");
  fit_cmd->add_option("--offset", fit.offset, "Seed-word rating offset");
  fit_cmd->add_option("--learning-rate", fit.learning_rate);
  fit_cmd->add_option("--max-iters", fit.max_iters);
  fit_cmd->add_option("--rng-seed", fit.rng_seed);
  fit_cmd->add_flag("--no-case-fold", fit.no_case_fold, "Keep word case as-is");

  std::string config_path;
  std::string out_dir = ".";
  auto* eval_cmd = app.add_subcommand("eval", "Run the cross-validation protocol from a JSON config");
  eval_cmd->add_option("--config", config_path, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--out-dir", out_dir, "Directory for runs.csv, summary.csv, report.json");

  std::string embeddings;
  std::string ratings;
  std::vector<std::string> dimension_files;
  std::string out;
  bool no_case_fold = false;
  auto* project_cmd = app.add_subcommand("project", "PCA plane of rated words with dimension arrows");
  project_cmd->add_option("--embeddings", embeddings)->required()->check(CLI::ExistingFile);
  project_cmd->add_option("--ratings", ratings, "word,rating CSV")->required()->check(CLI::ExistingFile);
  project_cmd->add_option("--dimension", dimension_files, "Dimension JSON (repeatable)")->check(CLI::ExistingFile);
  project_cmd->add_option("--out", out, "Output CSV (default stdout)");
  project_cmd->add_flag("--no-case-fold", no_case_fold);

  std::string dimension_path;
  std::string words_path;
  auto* predict_cmd = app.add_subcommand("predict", "Score words on a dimension, highest first");
  predict_cmd->add_option("--embeddings", embeddings)->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--dimension", dimension_path)->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--words", words_path, "One word per line")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--out", out, "Output CSV (default stdout)");
  predict_cmd->add_flag("--no-case-fold", no_case_fold);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return usage_error(e.what());
  }

  if (log_level == "error") globals.level = LogLevel::Error;
  if (log_level == "info") globals.level = LogLevel::Info;
  if (log_level == "debug") globals.level = LogLevel::Debug;

  try {
    if (*fit_cmd) return cmd_fit(globals, fit);
    if (*eval_cmd) return cmd_eval(globals, config_path, out_dir);
    if (*project_cmd) return cmd_project(globals, embeddings, ratings, dimension_files, no_case_fold, out);
    if (*predict_cmd) return cmd_predict(globals, embeddings, dimension_path, words_path, no_case_fold, out);
  } catch (const Error& e) {
    return report_error(e);
  } catch (const std::exception& e) {
    return report_error("Internal", e.what(), std::nullopt, kExitFailure);
  }
  return kExitUsage;
}
