#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "interpdim/datasets.hpp"
#include "interpdim/embeddings.hpp"
#include "interpdim/error.hpp"
#include "interpdim/linalg.hpp"
#include "interpdim/random.hpp"
#include "interpdim/text_io.hpp"

namespace interpdim {

enum class ModelTag { Seed, Fit, FitSW, FitSD, FitS };

inline constexpr ModelTag kAllModelTags[] = {ModelTag::Seed, ModelTag::Fit, ModelTag::FitSW,
                                             ModelTag::FitSD, ModelTag::FitS};

inline std::string_view to_string(ModelTag tag) {
  switch (tag) {
    case ModelTag::Seed: return "SEED";
    case ModelTag::Fit: return "FIT";
    case ModelTag::FitSW: return "FIT_SW";
    case ModelTag::FitSD: return "FIT_SD";
    case ModelTag::FitS: return "FIT_S";
  }
  return "?";
}

/// Accepts both "FIT_SW" and "fit+sw" spellings, case-insensitively.
inline std::optional<ModelTag> parse_model_tag(std::string_view name) {
  std::string key = text::to_lower_ascii(text::trim(name));
  for (char& ch : key) {
    if (ch == '+') ch = '_';
  }
  if (key == "seed") return ModelTag::Seed;
  if (key == "fit") return ModelTag::Fit;
  if (key == "fit_sw") return ModelTag::FitSW;
  if (key == "fit_sd") return ModelTag::FitSD;
  if (key == "fit_s") return ModelTag::FitS;
  return std::nullopt;
}

inline bool is_fitted(ModelTag tag) { return tag != ModelTag::Seed; }
inline bool uses_seed_words(ModelTag tag) { return tag == ModelTag::FitSW || tag == ModelTag::FitS; }
inline bool uses_seed_dims(ModelTag tag) { return tag == ModelTag::FitSD || tag == ModelTag::FitS; }

// |c| below this means the fitted direction carries no rating signal.
inline constexpr double kDegenerateScale = 1e-8;

/// A direction in embedding space. Fitted models also carry the affine
/// map (scale, bias) relating projections to gold ratings.
struct Dimension {
  Vector direction;
  std::optional<double> scale;
  std::optional<double> bias;
  ModelTag model = ModelTag::Seed;
  std::string property;
  std::string config_digest;

  void validate() const {
    if (!all_finite(direction)) throw Error(ErrorKind::ZeroDirection, "non-finite direction");
    if (norm(direction) <= kZeroNormTolerance) throw Error(ErrorKind::ZeroDirection, "norm below 1e-12");
    if (scale.has_value() != bias.has_value()) {
      throw Error(ErrorKind::InvalidArgument, "scale and bias must be both present or both absent");
    }
    if (scale.has_value() != is_fitted(model)) {
      throw Error(ErrorKind::InvalidArgument,
                  std::string(to_string(model)) + " dimension has wrong calibration fields");
    }
  }
};

struct FitConfig {
  double alpha = 1.0;
  double offset = 1.0;
  double jitter_lo = 0.001;
  double jitter_hi = 0.005;
  double learning_rate = 0.01;
  std::size_t max_iters = 10000;
  double rel_tol = 1e-9;
  bool average_seed_dims = true;
  // Start f from the mean seed dimension when seed dims are in play.
  bool init_from_seed_dims = true;
  // Halve the step instead of accepting a loss increase.
  bool step_halving = true;
  std::uint64_t rng_seed = 0;

  void validate() const {
    const auto bad = [](const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); };
    if (!(alpha >= 0.0 && alpha <= 1.0)) bad("alpha must lie in [0, 1]");
    if (!(offset > 0.0)) bad("offset must be positive");
    if (!(jitter_lo <= jitter_hi) || !std::isfinite(jitter_lo) || !std::isfinite(jitter_hi)) {
      bad("jitter interval must satisfy lo <= hi");
    }
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) bad("learning_rate must be positive");
    if (max_iters == 0) bad("max_iters must be positive");
    if (!(rel_tol > 0.0)) bad("rel_tol must be positive");
  }

  std::string digest() const {
    std::string canon = "alpha=" + text::format_double(alpha) + ";offset=" + text::format_double(offset) +
                        ";jitter=" + text::format_double(jitter_lo) + "," + text::format_double(jitter_hi) +
                        ";lr=" + text::format_double(learning_rate) +
                        ";max_iters=" + std::to_string(max_iters) + ";rel_tol=" + text::format_double(rel_tol) +
                        ";avg=" + std::to_string(average_seed_dims) +
                        ";init_seed_dims=" + std::to_string(init_from_seed_dims) +
                        ";halving=" + std::to_string(step_halving) + ";rng=" + std::to_string(rng_seed);
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(stable_hash(canon)));
    return hex;
  }
};

/// Per-model defaults: alpha 0.02 for FIT_SD and 0.05 for FIT_S (the tuned
/// GloVe values); alpha is irrelevant to the other models.
inline FitConfig default_fit_config(ModelTag tag) {
  FitConfig cfg;
  if (tag == ModelTag::FitSD) cfg.alpha = 0.02;
  if (tag == ModelTag::FitS) cfg.alpha = 0.05;
  return cfg;
}

/// Row-major (vector, gold) training rows sharing one dimensionality.
class TrainingSet {
 public:
  explicit TrainingSet(std::size_t dim) : dim_(dim) {}

  void add(std::span<const double> x, double gold) {
    if (x.size() != dim_) {
      throw Error(ErrorKind::DimensionMismatch,
                  std::to_string(x.size()) + " vs " + std::to_string(dim_));
    }
    features_.insert(features_.end(), x.begin(), x.end());
    golds_.push_back(gold);
  }

  std::size_t size() const noexcept { return golds_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return golds_.empty(); }
  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * dim_, dim_};
  }
  double gold(std::size_t i) const { return golds_[i]; }
  const std::vector<double>& golds() const noexcept { return golds_; }
  void set_gold(std::size_t i, double gold) { golds_[i] = gold; }

 private:
  std::size_t dim_;
  std::vector<double> features_;
  std::vector<double> golds_;
};

/// Gathers exactly the listed dataset rows into a training set.
inline TrainingSet make_training_set(const RatingDataset& dataset, const EmbeddingStore& store,
                                     std::span<const std::size_t> indices) {
  TrainingSet train(store.dim());
  for (std::size_t i : indices) {
    const auto& row = dataset.rows.at(i);
    const auto v = store.lookup(row.word);
    if (!v) throw Error(ErrorKind::InvalidArgument, "word '" + row.word + "' not in embeddings");
    train.add(*v, row.gold);
  }
  return train;
}

inline TrainingSet make_training_set(const RatingDataset& dataset, const EmbeddingStore& store) {
  std::vector<std::size_t> all(dataset.rows.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return make_training_set(dataset, store, all);
}

namespace detail {

inline std::span<const double> seed_vector(const EmbeddingStore& store, const std::string& word) {
  const auto v = store.lookup(word);
  if (!v) throw Error(ErrorKind::MissingSeedWord, word);
  return *v;
}

}  // namespace detail

/// One `positive - negative` vector per seed pair, in lexicon order.
inline std::vector<Vector> seed_difference_vectors(const SeedLexicon& lexicon,
                                                   const EmbeddingStore& store) {
  std::vector<Vector> diffs;
  diffs.reserve(lexicon.pairs.size());
  for (const auto& pair : lexicon.pairs) {
    const auto p = detail::seed_vector(store, pair.positive);
    const auto n = detail::seed_vector(store, pair.negative);
    diffs.push_back(subtract(p, n));
  }
  return diffs;
}

inline Dimension seed_dimension(const SeedLexicon& lexicon, const EmbeddingStore& store) {
  if (lexicon.pairs.empty()) throw Error(ErrorKind::EmptyLexicon, lexicon.property);
  Dimension d;
  d.direction = mean_of(seed_difference_vectors(lexicon, store));
  d.model = ModelTag::Seed;
  d.property = lexicon.property;
  if (norm(d.direction) <= kZeroNormTolerance) {
    throw Error(ErrorKind::ZeroDirection, "seed difference vectors cancel out");
  }
  return d;
}

/// (a . d) / ||d||
inline double scalar_projection(std::span<const double> word_vector, std::span<const double> direction) {
  require_same_size(word_vector, direction);
  const double n = norm(direction);
  if (!(n > kZeroNormTolerance)) throw Error(ErrorKind::ZeroDirection, "norm below 1e-12");
  return dot(word_vector, direction) / n;
}

inline double scalar_projection(std::span<const double> word_vector, const Dimension& dim) {
  return scalar_projection(word_vector, dim.direction);
}

/// Sum of squared residuals (w . f - c*y - b)^2, with no normalization.
inline double loss_jf(std::span<const double> f, double c, double b, const TrainingSet& train) {
  if (train.empty()) throw Error(ErrorKind::TooFewRows, "empty training set");
  double sum = 0.0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const double r = dot(train.row(i), f) - c * train.gold(i) - b;
    sum += r * r;
  }
  return sum;
}

/// Sum over seed dimensions of (1 - cosine(d, f)).
inline double loss_jd(std::span<const double> f, const std::vector<Vector>& dims) {
  double sum = 0.0;
  for (const auto& d : dims) sum += 1.0 - cosine(d, f);
  return sum;
}

inline double combined_loss(std::span<const double> f, double c, double b, const TrainingSet& train,
                            const std::vector<Vector>& dims, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorKind::InvalidArgument, "alpha outside [0, 1]");
  return alpha * loss_jf(f, c, b, train) + (1.0 - alpha) * loss_jd(f, dims);
}

struct LossGradient {
  double loss = 0.0;
  double jf = 0.0;
  double jd = 0.0;
  Vector grad_f;
  double grad_c = 0.0;
  double grad_b = 0.0;
};

/// Value and analytic gradient of alpha*J_f + (1-alpha)*J_d w.r.t. (f, c, b).
inline LossGradient combined_loss_gradient(std::span<const double> f, double c, double b,
                                           const TrainingSet& train, const std::vector<Vector>& dims,
                                           double alpha) {
  if (train.empty()) throw Error(ErrorKind::TooFewRows, "empty training set");
  require_same_size(f, train.row(0));
  LossGradient out;
  out.grad_f.assign(f.size(), 0.0);

  // J_f: dJ/df = 2 sum r_i w_i, dJ/dc = -2 sum r_i y_i, dJ/db = -2 sum r_i.
  Vector gf(f.size(), 0.0);
  double gc = 0.0;
  double gb = 0.0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto w = train.row(i);
    const double r = dot(w, f) - c * train.gold(i) - b;
    out.jf += r * r;
    axpy(2.0 * r, w, gf);
    gc -= 2.0 * r * train.gold(i);
    gb -= 2.0 * r;
  }

  // J_d: d(1 - cos)/df = -(d / (|d||f|) - cos * f / |f|^2).
  Vector gd(f.size(), 0.0);
  if (!dims.empty()) {
    const double nf = norm(f);
    if (!(nf > kZeroNormTolerance)) throw Error(ErrorKind::ZeroVector, "fitted direction collapsed to zero");
    for (const auto& d : dims) {
      require_same_size(f, d);
      const double nd = norm(d);
      if (!(nd > kZeroNormTolerance)) throw Error(ErrorKind::ZeroVector, "zero seed dimension");
      const double cos = dot(d, f) / (nd * nf);
      out.jd += 1.0 - cos;
      axpy(-1.0 / (nd * nf), d, gd);
      axpy(cos / (nf * nf), f, gd);
    }
  }

  out.loss = alpha * out.jf + (1.0 - alpha) * out.jd;
  for (std::size_t j = 0; j < f.size(); ++j) out.grad_f[j] = alpha * gf[j] + (1.0 - alpha) * gd[j];
  out.grad_c = alpha * gc;
  out.grad_b = alpha * gb;
  return out;
}

/// Adds one synthetic row per seed word: positives at max(gold) + offset + j,
/// negatives at min(gold) - offset - j, with j ~ U[jitter_lo, jitter_hi].
/// Seed words that already have a rated row keep both rows.
inline TrainingSet augment_with_seed_words(const TrainingSet& train, const SeedLexicon& lexicon,
                                           const EmbeddingStore& store, double offset,
                                           double jitter_lo, double jitter_hi,
                                           std::uint64_t rng_seed) {
  if (!(offset > 0.0)) throw Error(ErrorKind::InvalidArgument, "offset must be positive");
  if (!(jitter_lo <= jitter_hi)) throw Error(ErrorKind::InvalidArgument, "jitter_lo > jitter_hi");
  if (train.empty()) throw Error(ErrorKind::TooFewRows, "empty training set");
  double lo = train.gold(0);
  double hi = train.gold(0);
  for (double g : train.golds()) {
    lo = std::min(lo, g);
    hi = std::max(hi, g);
  }
  Rng rng(rng_seed);
  std::uniform_real_distribution<double> jitter(jitter_lo, jitter_hi);
  const auto draw = [&] { return jitter_lo == jitter_hi ? jitter_lo : jitter(rng); };

  TrainingSet out = train;
  for (const auto& pair : lexicon.pairs) {
    const auto n = detail::seed_vector(store, pair.negative);
    const auto p = detail::seed_vector(store, pair.positive);
    out.add(n, lo - offset - draw());
    out.add(p, hi + offset + draw());
  }
  return out;
}

struct FitTrace {
  // Loss after initialization, then after every accepted step.
  std::vector<double> losses;
  std::size_t iterations = 0;
  std::size_t rejected_steps = 0;
  bool converged = false;
  double final_loss = 0.0;
  double final_jf = 0.0;
  double final_learning_rate = 0.0;
};

struct FitResult {
  Dimension dimension;
  FitTrace trace;
};

/// Full-batch gradient descent on the combined loss over (f, c, b). With no
/// seed dimensions the objective is pure J_f whatever alpha says. Returns
/// the optimum even when |c| collapsed; fit_dimension() rejects that case.
inline FitResult optimize_dimension(const TrainingSet& train, const std::vector<Vector>& dims,
                                    const FitConfig& config, ModelTag tag, std::string property = {}) {
  config.validate();
  if (train.size() < 2) throw Error(ErrorKind::TooFewRows, "fit needs at least 2 training rows");
  const double alpha = dims.empty() ? 1.0 : config.alpha;
  const std::size_t dim = train.dim();

  Vector f;
  if (!dims.empty() && config.init_from_seed_dims) {
    f = mean_of(dims);
    require_same_size(f, train.row(0));
  }
  if (f.empty() || norm(f) <= kZeroNormTolerance) {
    Rng rng(config.rng_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    f.assign(dim, 0.0);
    for (double& x : f) x = normal(rng);
    const double n = norm(f);
    for (double& x : f) x /= n;
  }
  double c = 1.0;
  double b = 0.0;

  FitTrace trace;
  LossGradient current = combined_loss_gradient(f, c, b, train, dims, alpha);
  if (!std::isfinite(current.loss)) throw Error(ErrorKind::NonFiniteLoss, "initial loss is not finite");
  trace.losses.push_back(current.loss);

  double lr = config.learning_rate;
  const double min_lr = config.learning_rate * 1e-30;
  Vector candidate(dim);
  while (trace.iterations < config.max_iters) {
    ++trace.iterations;
    if (current.loss == 0.0) {
      trace.converged = true;
      break;
    }
    for (std::size_t j = 0; j < dim; ++j) candidate[j] = f[j] - lr * current.grad_f[j];
    const double next_c = c - lr * current.grad_c;
    const double next_b = b - lr * current.grad_b;
    LossGradient next;
    bool finite = true;
    try {
      next = combined_loss_gradient(candidate, next_c, next_b, train, dims, alpha);
      finite = std::isfinite(next.loss) && all_finite(next.grad_f);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ZeroVector) throw;
      finite = false;
    }

    if (config.step_halving && (!finite || next.loss > current.loss)) {
      ++trace.rejected_steps;
      lr *= 0.5;
      if (lr < min_lr) {
        trace.converged = true;
        break;
      }
      continue;
    }
    if (!finite) {
      throw Error(ErrorKind::NonFiniteLoss,
                  "diverged at iteration " + std::to_string(trace.iterations) +
                      "; learning rate too high");
    }

    const double decrease = (current.loss - next.loss) / current.loss;
    f.swap(candidate);
    c = next_c;
    b = next_b;
    current = std::move(next);
    trace.losses.push_back(current.loss);
    if (decrease >= 0.0 && decrease < config.rel_tol) {
      trace.converged = true;
      break;
    }
  }

  trace.final_loss = current.loss;
  trace.final_jf = current.jf;
  trace.final_learning_rate = lr;

  FitResult result;
  result.dimension.direction = std::move(f);
  result.dimension.scale = c;
  result.dimension.bias = b;
  result.dimension.model = tag;
  result.dimension.property = std::move(property);
  result.dimension.config_digest = config.digest();
  result.trace = std::move(trace);
  return result;
}

/// optimize_dimension() plus the validity checks: DegenerateFit when
/// |c| < 1e-8, ZeroDirection when f vanished.
inline FitResult fit_dimension(const TrainingSet& train, const std::vector<Vector>& dims,
                               const FitConfig& config, ModelTag tag, std::string property = {}) {
  FitResult result = optimize_dimension(train, dims, config, tag, std::move(property));
  const double c = *result.dimension.scale;
  if (!(std::abs(c) >= kDegenerateScale)) {
    throw Error(ErrorKind::DegenerateFit, "|c| = " + text::format_double(std::abs(c)));
  }
  result.dimension.validate();
  return result;
}

/// The seed dimensions fed to J_d: the single averaged seed direction, or
/// every pair's difference vector.
inline std::vector<Vector> seed_dimensions_for_fit(const SeedLexicon& lexicon, const EmbeddingStore& store,
                                                   bool average) {
  if (average) return {seed_dimension(lexicon, store).direction};
  return seed_difference_vectors(lexicon, store);
}

/// Dispatches to the five models. `lexicon` may be null only for FIT.
inline FitResult build_model(ModelTag tag, const TrainingSet& train, const SeedLexicon* lexicon,
                             const EmbeddingStore& store, const FitConfig& config) {
  if (tag != ModelTag::Fit && lexicon == nullptr) {
    throw Error(ErrorKind::InvalidArgument, std::string(to_string(tag)) + " requires a seed lexicon");
  }
  const std::string property = lexicon ? lexicon->property : std::string{};
  switch (tag) {
    case ModelTag::Seed: {
      FitResult r;
      r.dimension = seed_dimension(*lexicon, store);
      r.dimension.config_digest = config.digest();
      return r;
    }
    case ModelTag::Fit:
      return fit_dimension(train, {}, config, tag, property);
    case ModelTag::FitSW: {
      const auto augmented = augment_with_seed_words(train, *lexicon, store, config.offset,
                                                     config.jitter_lo, config.jitter_hi, config.rng_seed);
      return fit_dimension(augmented, {}, config, tag, property);
    }
    case ModelTag::FitSD:
      return fit_dimension(train, seed_dimensions_for_fit(*lexicon, store, config.average_seed_dims), config,
                           tag, property);
    case ModelTag::FitS: {
      const auto augmented = augment_with_seed_words(train, *lexicon, store, config.offset,
                                                     config.jitter_lo, config.jitter_hi, config.rng_seed);
      return fit_dimension(augmented, seed_dimensions_for_fit(*lexicon, store, config.average_seed_dims),
                           config, tag, property);
    }
  }
  throw Error(ErrorKind::InvalidArgument, "unknown model tag");
}

/// SEED: raw scalar projection. Fitted models invert w.f = c*y + b.
inline double predict_rating(std::span<const double> word_vector, const Dimension& dim) {
  if (!is_fitted(dim.model)) return scalar_projection(word_vector, dim);
  if (!dim.scale || !dim.bias) throw Error(ErrorKind::DegenerateFit, "fitted dimension without scale/bias");
  if (std::abs(*dim.scale) < kDegenerateScale) {
    throw Error(ErrorKind::DegenerateFit, "|c| = " + text::format_double(std::abs(*dim.scale)));
  }
  return (dot(word_vector, dim.direction) - *dim.bias) / *dim.scale;
}

}  // namespace interpdim
