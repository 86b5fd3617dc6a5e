#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "interpdim/error.hpp"

namespace interpdim {

/// Gold and predicted scores over all words of a condition, plus the
/// positions that form the test fold.
struct ScoredWords {
  std::vector<std::string> words;  // optional labels
  std::vector<double> gold;
  std::vector<double> predicted;
  std::vector<std::size_t> test_indices;

  std::size_t size() const noexcept { return gold.size(); }

  void validate() const {
    if (gold.size() != predicted.size() || (!words.empty() && words.size() != gold.size())) {
      throw Error(ErrorKind::DimensionMismatch, "gold/predicted/words lengths differ");
    }
    if (gold.size() < 2) throw Error(ErrorKind::TooFewRows, "need at least 2 scored words");
    if (test_indices.empty()) throw Error(ErrorKind::InvalidArgument, "empty test set");
    std::unordered_set<std::size_t> seen;
    for (std::size_t t : test_indices) {
      if (t >= gold.size()) throw Error(ErrorKind::InvalidArgument, "test index out of range");
      if (!seen.insert(t).second) throw Error(ErrorKind::InvalidArgument, "duplicate test index");
    }
  }
};

/// 1 iff gold and prediction order the pair the same strict way; any tie is 0.
inline int rank_match(double gold_i, double gold_j, double pred_i, double pred_j) noexcept {
  return ((gold_i < gold_j && pred_i < pred_j) || (gold_i > gold_j && pred_i > pred_j)) ? 1 : 0;
}

// Both accuracies divide by the number of pairs actually counted, so a
// perfect ordering scores 1 and a random one about 0.5.

inline double pairwise_rank_accuracy(std::span<const double> gold, std::span<const double> predicted) {
  if (gold.size() != predicted.size()) throw Error(ErrorKind::DimensionMismatch, "gold/predicted lengths differ");
  const std::size_t n = gold.size();
  if (n < 2) throw Error(ErrorKind::TooFewRows, "need at least 2 words");
  std::size_t matches = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) matches += rank_match(gold[i], gold[j], predicted[i], predicted[j]);
  }
  return static_cast<double>(matches) / static_cast<double>(n * (n - 1) / 2);
}

inline double pairwise_rank_accuracy(const ScoredWords& scored) {
  return pairwise_rank_accuracy(scored.gold, scored.predicted);
}

/// Rank accuracy over test-test pairs plus every (test, train) pair.
inline double extended_rank_accuracy(const ScoredWords& scored) {
  scored.validate();
  const std::size_t n = scored.size();
  const std::size_t l = scored.test_indices.size();
  std::vector<bool> is_test(n, false);
  for (std::size_t t : scored.test_indices) is_test[t] = true;
  const auto& g = scored.gold;
  const auto& p = scored.predicted;

  std::size_t matches = 0;
  for (std::size_t a = 0; a < l; ++a) {
    const std::size_t i = scored.test_indices[a];
    for (std::size_t b = a + 1; b < l; ++b) {
      const std::size_t j = scored.test_indices[b];
      matches += rank_match(g[i], g[j], p[i], p[j]);
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (!is_test[j]) matches += rank_match(g[i], g[j], p[i], p[j]);
    }
  }
  const std::size_t pairs = l * (l - 1) / 2 + l * (n - l);
  if (pairs == 0) throw Error(ErrorKind::TooFewRows, "no pairs to compare");
  return static_cast<double>(matches) / static_cast<double>(pairs);
}

inline double mse(const ScoredWords& scored, bool restrict_to_test) {
  if (scored.gold.size() != scored.predicted.size()) {
    throw Error(ErrorKind::DimensionMismatch, "gold/predicted lengths differ");
  }
  double sum = 0.0;
  std::size_t count = 0;
  const auto add = [&](std::size_t i) {
    const double e = scored.predicted[i] - scored.gold[i];
    sum += e * e;
    ++count;
  };
  if (restrict_to_test) {
    for (std::size_t t : scored.test_indices) {
      if (t >= scored.size()) throw Error(ErrorKind::InvalidArgument, "test index out of range");
      add(t);
    }
  } else {
    for (std::size_t i = 0; i < scored.size(); ++i) add(i);
  }
  if (count == 0) throw Error(ErrorKind::TooFewRows, "empty evaluation set");
  return sum / static_cast<double>(count);
}

struct Calibration {
  double slope = 1.0;
  double intercept = 0.0;
  // Set when the predictor was constant and the mean-gold fallback was used.
  bool degenerate = false;
};

/// Ordinary least squares gold ~ slope * pred + intercept. A constant
/// predictor falls back to slope 0, intercept mean(gold).
inline Calibration fit_calibration(std::span<const double> train_pred, std::span<const double> train_gold) {
  if (train_pred.size() != train_gold.size()) throw Error(ErrorKind::DimensionMismatch, "pred/gold lengths differ");
  const std::size_t n = train_pred.size();
  if (n < 2) throw Error(ErrorKind::TooFewRows, "calibration needs at least 2 points");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += train_pred[i];
    my += train_gold[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (train_pred[i] - mx) * (train_pred[i] - mx);
    sxy += (train_pred[i] - mx) * (train_gold[i] - my);
  }
  if (!(sxx > 0.0)) return {0.0, my, true};
  const double slope = sxy / sxx;
  return {slope, my - slope * mx, false};
}

inline double apply_calibration(const Calibration& cal, double pred) noexcept {
  return cal.slope * pred + cal.intercept;
}

inline std::vector<double> apply_calibration(const Calibration& cal, std::span<const double> preds) {
  std::vector<double> out;
  out.reserve(preds.size());
  for (double p : preds) out.push_back(apply_calibration(cal, p));
  return out;
}

}  // namespace interpdim
