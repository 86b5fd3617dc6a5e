#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "interpdim/baselines.hpp"
#include "interpdim/datasets.hpp"
#include "interpdim/dimensions.hpp"
#include "interpdim/embeddings.hpp"
#include "interpdim/error.hpp"
#include "interpdim/metrics.hpp"
#include "interpdim/random.hpp"

namespace interpdim {

/// The five dimension models plus the two baselines.
enum class ModelKind { Seed, Fit, FitSW, FitSD, FitS, Freq, Random };

inline std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Seed: return "SEED";
    case ModelKind::Fit: return "FIT";
    case ModelKind::FitSW: return "FIT_SW";
    case ModelKind::FitSD: return "FIT_SD";
    case ModelKind::FitS: return "FIT_S";
    case ModelKind::Freq: return "FREQ";
    case ModelKind::Random: return "RANDOM";
  }
  return "?";
}

inline std::optional<ModelKind> parse_model_kind(std::string_view name) {
  const std::string key = text::to_lower_ascii(text::trim(name));
  if (key == "freq") return ModelKind::Freq;
  if (key == "random" || key == "rand") return ModelKind::Random;
  if (const auto tag = parse_model_tag(key)) return static_cast<ModelKind>(static_cast<int>(*tag));
  return std::nullopt;
}

inline std::optional<ModelTag> model_tag(ModelKind kind) {
  if (kind == ModelKind::Freq || kind == ModelKind::Random) return std::nullopt;
  return static_cast<ModelTag>(static_cast<int>(kind));
}

// Uncalibrated scorers get a per-fold linear map onto the gold scale.
inline bool needs_calibration(ModelKind kind) {
  return kind == ModelKind::Seed || kind == ModelKind::Freq || kind == ModelKind::Random;
}

inline bool needs_lexicon(ModelKind kind) {
  return kind == ModelKind::Seed || kind == ModelKind::FitSW || kind == ModelKind::FitSD ||
         kind == ModelKind::FitS;
}

struct ConditionSpec {
  std::string name;
  Condition condition;
  std::filesystem::path ratings;
  std::optional<std::filesystem::path> seeds;
};

struct ExperimentConfig {
  std::vector<ConditionSpec> conditions;
  std::filesystem::path embeddings;
  EmbeddingLoadOptions embedding_options;
  std::optional<std::filesystem::path> frequency;
  std::vector<ModelKind> models{ModelKind::Seed,  ModelKind::Fit,  ModelKind::FitSW, ModelKind::FitSD,
                                ModelKind::FitS,  ModelKind::Freq, ModelKind::Random};
  std::size_t k = 5;
  std::vector<std::uint64_t> rng_seeds{1, 2, 3};
  // Folds come from split_seed and are shared by all rng_seeds unless
  // resplit_per_seed is set, in which case each rng_seed draws its own.
  std::uint64_t split_seed = 0;
  bool resplit_per_seed = false;
  std::map<ModelKind, FitConfig> fit;
  bool scramble_diagnostic = false;

  FitConfig fit_config(ModelKind kind) const {
    if (const auto it = fit.find(kind); it != fit.end()) return it->second;
    if (const auto tag = model_tag(kind)) return default_fit_config(*tag);
    return FitConfig{};
  }

  void validate() const {
    if (k < 2) throw Error(ErrorKind::InvalidConfig, "k must be at least 2");
    if (rng_seeds.empty()) throw Error(ErrorKind::InvalidConfig, "rng_seeds must be nonempty");
    if (models.empty()) throw Error(ErrorKind::InvalidConfig, "models must be nonempty");
    for (const auto& [kind, cfg] : fit) cfg.validate();
  }
};

/// A condition after vocabulary filtering and z-scoring.
struct ConditionData {
  std::string name;
  RatingDataset dataset;
  std::optional<SeedLexicon> lexicon;
  std::vector<std::string> dropped;
};

/// Load, restrict to the embedding vocabulary, then z-score the survivors.
inline ConditionData prepare_condition(const ConditionSpec& spec, const EmbeddingStore& store) {
  ConditionData data;
  data.name = spec.name.empty() ? spec.condition.name() : spec.name;
  auto filtered = filter_to_vocabulary(load_ratings(spec.ratings, spec.condition), store);
  data.dataset = zscore(filtered.dataset);
  data.dropped = std::move(filtered.dropped);
  if (spec.seeds) data.lexicon = load_seed_lexicon(*spec.seeds, spec.condition.property);
  return data;
}

struct RunRecord {
  ModelKind model = ModelKind::Seed;
  std::string condition;
  std::uint64_t rng_seed = 0;
  std::size_t fold = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double r_plus_acc = std::numeric_limits<double>::quiet_NaN();
  double mse = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> train_loss;
  bool ok = false;
  std::string error;
};

struct FoldOutcome {
  std::vector<double> raw_predictions;
  // Calibrated for SEED/FREQ/RANDOM, identical to raw otherwise.
  std::vector<double> predictions;
  std::optional<Calibration> calibration;
  std::optional<FitResult> fit;
  double r_plus_acc = 0.0;
  double mse = 0.0;
};

/// Trains one model on `train` rows, predicts every word, and scores the
/// `test` rows. Nothing here reads a test gold except the metrics.
inline FoldOutcome run_fold(ModelKind kind, const ConditionData& data, const EmbeddingStore& store,
                            const FrequencyTable* frequency, std::span<const std::size_t> train,
                            std::span<const std::size_t> test, FitConfig config, std::uint64_t run_seed) {
  const auto& rows = data.dataset.rows;
  const std::size_t n = rows.size();
  const SeedLexicon* lexicon = data.lexicon ? &*data.lexicon : nullptr;
  if (needs_lexicon(kind) && lexicon == nullptr) {
    throw Error(ErrorKind::InvalidConfig, std::string(to_string(kind)) + " needs a seed lexicon");
  }

  FoldOutcome out;
  const auto vector_of = [&](std::size_t i) {
    const auto v = store.lookup(rows[i].word);
    if (!v) throw Error(ErrorKind::InvalidArgument, "word '" + rows[i].word + "' not in embeddings");
    return *v;
  };

  if (const auto tag = model_tag(kind)) {
    config.rng_seed = run_seed;
    out.fit = build_model(*tag, make_training_set(data.dataset, store, train), lexicon, store, config);
    out.raw_predictions.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.raw_predictions.push_back(predict_rating(vector_of(i), out.fit->dimension));
  } else if (kind == ModelKind::Freq) {
    if (frequency == nullptr) throw Error(ErrorKind::InvalidConfig, "FREQ needs a frequency table");
    out.raw_predictions = frequency_scores(data.dataset.words(), *frequency).scores;
  } else {
    out.raw_predictions = random_scores(n, run_seed);
  }

  if (needs_calibration(kind)) {
    std::vector<double> train_pred;
    std::vector<double> train_gold;
    for (std::size_t i : train) {
      train_pred.push_back(out.raw_predictions[i]);
      train_gold.push_back(rows[i].gold);
    }
    out.calibration = fit_calibration(train_pred, train_gold);
    out.predictions = apply_calibration(*out.calibration, out.raw_predictions);
  } else {
    out.predictions = out.raw_predictions;
  }

  ScoredWords scored;
  scored.gold = data.dataset.golds();
  scored.test_indices.assign(test.begin(), test.end());
  scored.predicted = out.raw_predictions;
  out.r_plus_acc = extended_rank_accuracy(scored);
  scored.predicted = out.predictions;
  out.mse = mse(scored, true);
  return out;
}

inline std::uint64_t run_seed_for(std::uint64_t rng_seed, const std::string& condition, std::size_t fold,
                                  ModelKind kind) {
  return derive_seed(rng_seed, {stable_hash(condition), fold, static_cast<std::uint64_t>(kind)});
}

inline FoldPlan fold_plan_for(const ExperimentConfig& config, const std::string& condition, std::size_t n,
                              std::uint64_t rng_seed) {
  const std::uint64_t base = config.resplit_per_seed ? rng_seed : config.split_seed;
  return make_folds(n, config.k, derive_seed(base, {stable_hash(condition)}));
}

namespace detail {

template <typename Task>
void parallel_for(std::size_t count, unsigned threads, Task task) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  for (unsigned t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) task(i);
    });
  }
}

}  // namespace detail

/// Records for every (seed, fold, model); one row each, failures included.
inline std::vector<RunRecord> run_condition(const ExperimentConfig& config, const ConditionData& data,
                                            const EmbeddingStore& store, const FrequencyTable* frequency,
                                            unsigned threads = 1) {
  config.validate();
  const std::size_t n = data.dataset.rows.size();
  if (n < config.k) {
    throw Error(ErrorKind::TooFewRows,
                data.name + ": " + std::to_string(n) + " rows for " + std::to_string(config.k) + " folds");
  }
  std::vector<FoldPlan> plans;
  for (std::uint64_t seed : config.rng_seeds) plans.push_back(fold_plan_for(config, data.name, n, seed));

  const std::size_t per_seed = config.k * config.models.size();
  std::vector<RunRecord> records(config.rng_seeds.size() * per_seed);
  detail::parallel_for(records.size(), threads, [&](std::size_t idx) {
    const std::size_t s = idx / per_seed;
    const std::size_t fold = (idx % per_seed) / config.models.size();
    const ModelKind kind = config.models[idx % config.models.size()];
    RunRecord& rec = records[idx];
    rec.model = kind;
    rec.condition = data.name;
    rec.rng_seed = config.rng_seeds[s];
    rec.fold = fold;
    const auto train = plans[s].train_indices(fold);
    const auto test = plans[s].test_indices(fold);
    rec.n_train = train.size();
    rec.n_test = test.size();
    try {
      const auto outcome = run_fold(kind, data, store, frequency, train, test, config.fit_config(kind),
                                    run_seed_for(rec.rng_seed, data.name, fold, kind));
      rec.r_plus_acc = outcome.r_plus_acc;
      rec.mse = outcome.mse;
      if (outcome.fit && is_fitted(outcome.fit->dimension.model)) rec.train_loss = outcome.fit->trace.final_jf;
      rec.ok = true;
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
  });
  return records;
}

/// Error rows for a condition that could not be prepared at all, so the
/// (model, seed, fold) accounting still holds.
inline std::vector<RunRecord> failed_condition_records(const ExperimentConfig& config, const std::string& name,
                                                       const std::string& error) {
  std::vector<RunRecord> records;
  for (std::uint64_t seed : config.rng_seeds) {
    for (std::size_t fold = 0; fold < config.k; ++fold) {
      for (ModelKind kind : config.models) {
        RunRecord rec;
        rec.model = kind;
        rec.condition = name;
        rec.rng_seed = seed;
        rec.fold = fold;
        rec.error = error;
        records.push_back(std::move(rec));
      }
    }
  }
  return records;
}

struct ConditionSummary {
  ModelKind model = ModelKind::Seed;
  std::string condition;
  double mean_r_plus_acc = std::numeric_limits<double>::quiet_NaN();
  double stderr_r_plus_acc = std::numeric_limits<double>::quiet_NaN();
  double median_mse = std::numeric_limits<double>::quiet_NaN();
  std::size_t runs = 0;
  std::size_t errors = 0;
  std::vector<double> r_plus_acc_runs;
  std::vector<double> mse_runs;
};

struct GlobalSummary {
  ModelKind model = ModelKind::Seed;
  double mean_r_plus_acc = std::numeric_limits<double>::quiet_NaN();
  double stderr_r_plus_acc = std::numeric_limits<double>::quiet_NaN();
  // Mean over conditions of the per-condition median MSE.
  double median_mse = std::numeric_limits<double>::quiet_NaN();
  std::size_t conditions = 0;
};

struct EvalReport {
  std::vector<RunRecord> runs;
  std::vector<ConditionSummary> per_condition;
  std::vector<GlobalSummary> global;

  const ConditionSummary* find(ModelKind model, const std::string& condition) const {
    for (const auto& s : per_condition) {
      if (s.model == model && s.condition == condition) return &s;
    }
    return nullptr;
  }
  const GlobalSummary* find(ModelKind model) const {
    for (const auto& g : global) {
      if (g.model == model) return &g;
    }
    return nullptr;
  }
  std::vector<std::string> conditions() const {
    std::vector<std::string> out;
    for (const auto& s : per_condition) {
      if (std::find(out.begin(), out.end(), s.condition) == out.end()) out.push_back(s.condition);
    }
    return out;
  }
};

namespace stats {

inline double mean(std::span<const double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

// Even counts average the two middle values.
inline double median(std::vector<double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  const std::size_t m = xs.size() / 2;
  return xs.size() % 2 == 1 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

/// Sample standard deviation (divisor n - 1); 0 for fewer than two values.
inline double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

inline double standard_error(std::span<const double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  return sample_std(xs) / std::sqrt(static_cast<double>(xs.size()));
}

}  // namespace stats

inline EvalReport aggregate(std::vector<RunRecord> records) {
  EvalReport report;
  for (const auto& rec : records) {
    auto it = std::find_if(report.per_condition.begin(), report.per_condition.end(), [&](const auto& s) {
      return s.model == rec.model && s.condition == rec.condition;
    });
    if (it == report.per_condition.end()) {
      report.per_condition.push_back({});
      it = std::prev(report.per_condition.end());
      it->model = rec.model;
      it->condition = rec.condition;
    }
    if (rec.ok) {
      ++it->runs;
      it->r_plus_acc_runs.push_back(rec.r_plus_acc);
      it->mse_runs.push_back(rec.mse);
    } else {
      ++it->errors;
    }
  }
  for (auto& s : report.per_condition) {
    s.mean_r_plus_acc = stats::mean(s.r_plus_acc_runs);
    s.stderr_r_plus_acc = stats::standard_error(s.r_plus_acc_runs);
    s.median_mse = stats::median(s.mse_runs);
  }

  std::vector<ModelKind> models;
  for (const auto& s : report.per_condition) {
    if (std::find(models.begin(), models.end(), s.model) == models.end()) models.push_back(s.model);
  }
  for (ModelKind model : models) {
    std::vector<double> means;
    std::vector<double> medians;
    const ConditionSummary* only = nullptr;
    for (const auto& s : report.per_condition) {
      if (s.model != model || s.runs == 0) continue;
      means.push_back(s.mean_r_plus_acc);
      medians.push_back(s.median_mse);
      only = &s;
    }
    GlobalSummary g;
    g.model = model;
    g.conditions = means.size();
    if (!means.empty()) {
      g.mean_r_plus_acc = stats::mean(means);
      g.median_mse = stats::mean(medians);
      g.stderr_r_plus_acc = means.size() == 1 ? only->stderr_r_plus_acc : stats::standard_error(means);
    }
    report.global.push_back(g);
  }
  report.runs = std::move(records);
  return report;
}

struct ScrambleFit {
  // Final training J_f as optimized.
  double train_loss = 0.0;
  // J_f / c^2: squared error of the inverted predictions in gold units.
  double gold_scale_loss = 0.0;
  // |c| fell below 1e-8, i.e. J_f was driven to zero by the trivial solution.
  bool degenerate = false;
};

struct ScrambleDiagnostic {
  std::string condition;
  double train_loss_real = 0.0;
  double train_loss_scrambled = 0.0;
  ScrambleFit real;
  ScrambleFit scrambled;
};

inline ScrambleFit scramble_fit(const TrainingSet& train, const FitConfig& config) {
  const auto r = optimize_dimension(train, {}, config, ModelTag::Fit);
  const double c = *r.dimension.scale;
  ScrambleFit fit;
  fit.train_loss = r.trace.final_jf;
  fit.degenerate = !(std::abs(c) >= kDegenerateScale);
  fit.gold_scale_loss = fit.degenerate ? std::numeric_limits<double>::infinity() : r.trace.final_jf / (c * c);
  return fit;
}

/// Fits FIT on every row, once with the real golds and once with the
/// word/rating pairing scrambled, and reports both final training J_f.
inline ScrambleDiagnostic run_scramble_diagnostic(const ExperimentConfig& config, const ConditionData& data,
                                                  const EmbeddingStore& store) {
  if (std::find(config.models.begin(), config.models.end(), ModelKind::Fit) == config.models.end()) {
    throw Error(ErrorKind::InvalidConfig, "scramble diagnostic needs FIT among the models");
  }
  const std::uint64_t seed = config.rng_seeds.front();
  FitConfig cfg = config.fit_config(ModelKind::Fit);
  cfg.rng_seed = derive_seed(seed, {stable_hash(data.name), stable_hash("scramble-fit")});

  ScrambleDiagnostic diag;
  diag.condition = data.name;
  diag.real = scramble_fit(make_training_set(data.dataset, store), cfg);
  const auto scrambled_data =
      scramble_ratings(data.dataset, derive_seed(seed, {stable_hash(data.name), stable_hash("scramble")}));
  diag.scrambled = scramble_fit(make_training_set(scrambled_data, store), cfg);
  diag.train_loss_real = diag.real.train_loss;
  diag.train_loss_scrambled = diag.scrambled.train_loss;
  return diag;
}

struct ExperimentResult {
  EvalReport report;
  std::vector<ScrambleDiagnostic> scramble;
  std::vector<std::string> warnings;
};

/// Loads everything named by the config and runs the full protocol.
/// Condition-level failures become error rows; only an unreadable
/// embedding or frequency file aborts.
inline ExperimentResult run_experiment(const ExperimentConfig& config, unsigned threads = 1) {
  config.validate();
  const EmbeddingStore store = load_embeddings(config.embeddings, config.embedding_options);
  std::optional<FrequencyTable> frequency;
  if (config.frequency) frequency = load_frequency_table(*config.frequency, config.embedding_options.case_fold);

  ExperimentResult result;
  for (const auto& w : store.warnings()) result.warnings.push_back("embeddings: " + w);
  std::vector<RunRecord> records;
  for (const auto& spec : config.conditions) {
    const std::string name = spec.name.empty() ? spec.condition.name() : spec.name;
    std::optional<ConditionData> data;
    try {
      data = prepare_condition(spec, store);
    } catch (const std::exception& e) {
      result.warnings.push_back(name + ": " + e.what());
      auto failed = failed_condition_records(config, name, e.what());
      records.insert(records.end(), failed.begin(), failed.end());
      continue;
    }
    if (!data->dropped.empty()) {
      result.warnings.push_back(name + ": dropped " + std::to_string(data->dropped.size()) +
                                " word(s) missing from the embeddings");
    }
    if (data->dataset.duplicates_dropped > 0) {
      result.warnings.push_back(name + ": ignored " + std::to_string(data->dataset.duplicates_dropped) +
                                " duplicate rating row(s)");
    }
    try {
      auto rows = run_condition(config, *data, store, frequency ? &*frequency : nullptr, threads);
      records.insert(records.end(), rows.begin(), rows.end());
    } catch (const std::exception& e) {
      result.warnings.push_back(name + ": " + e.what());
      auto failed = failed_condition_records(config, name, e.what());
      records.insert(records.end(), failed.begin(), failed.end());
      continue;
    }
    if (config.scramble_diagnostic) {
      try {
        result.scramble.push_back(run_scramble_diagnostic(config, *data, store));
      } catch (const std::exception& e) {
        result.warnings.push_back(name + ": scramble diagnostic failed: " + e.what());
      }
    }
  }
  result.report = aggregate(std::move(records));
  return result;
}

/// Conditions where `better` does not beat `baseline` on mean r+-acc.
inline std::vector<std::string> conditions_not_improved(const EvalReport& report, ModelKind better,
                                                        ModelKind baseline) {
  std::vector<std::string> out;
  for (const auto& name : report.conditions()) {
    const auto* a = report.find(better, name);
    const auto* b = report.find(baseline, name);
    if (!a || !b || a->runs == 0 || b->runs == 0 || !(a->mean_r_plus_acc > b->mean_r_plus_acc)) {
      out.push_back(name);
    }
  }
  return out;
}

struct QuintileTrend {
  double bottom_improvement = 0.0;
  double top_improvement = 0.0;
  std::size_t per_quintile = 0;
};

/// Sorts conditions by the baseline's mean r+-acc and compares the mean
/// improvement of `better` over the lowest fifth against the highest fifth.
inline QuintileTrend improvement_by_baseline_quintile(const EvalReport& report, ModelKind better,
                                                      ModelKind baseline) {
  std::vector<std::pair<double, double>> points;  // (baseline score, improvement)
  for (const auto& name : report.conditions()) {
    const auto* a = report.find(better, name);
    const auto* b = report.find(baseline, name);
    if (!a || !b || a->runs == 0 || b->runs == 0) continue;
    points.emplace_back(b->mean_r_plus_acc, a->mean_r_plus_acc - b->mean_r_plus_acc);
  }
  if (points.size() < 5) throw Error(ErrorKind::TooFewRows, "quintiles need at least 5 conditions");
  std::sort(points.begin(), points.end());
  QuintileTrend trend;
  trend.per_quintile = points.size() / 5;
  for (std::size_t i = 0; i < trend.per_quintile; ++i) {
    trend.bottom_improvement += points[i].second;
    trend.top_improvement += points[points.size() - 1 - i].second;
  }
  trend.bottom_improvement /= static_cast<double>(trend.per_quintile);
  trend.top_improvement /= static_cast<double>(trend.per_quintile);
  return trend;
}

}  // namespace interpdim
