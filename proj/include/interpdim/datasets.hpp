#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "interpdim/embeddings.hpp"
#include "interpdim/error.hpp"
#include "interpdim/random.hpp"
#include "interpdim/text_io.hpp"

namespace interpdim {

struct Condition {
  std::string category;
  std::string property;

  std::string name() const {
    if (category.empty()) return property;
    return category + "/" + property;
  }
  bool operator==(const Condition&) const = default;
};

struct RatingRow {
  std::string word;
  double gold = 0.0;
};

struct RatingDataset {
  Condition condition;
  std::vector<RatingRow> rows;
  bool normalized = false;
  std::size_t duplicates_dropped = 0;

  std::size_t size() const noexcept { return rows.size(); }
  std::vector<double> golds() const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.gold);
    return out;
  }
  std::vector<std::string> words() const {
    std::vector<std::string> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.word);
    return out;
  }
};

struct SeedPair {
  std::string negative;
  std::string positive;
};

struct SeedLexicon {
  std::string property;
  std::vector<SeedPair> pairs;
};

namespace detail {

// Returns data lines as (1-based line number, text), header checked and
// removed. Blank and '#' lines are skipped.
inline std::vector<std::pair<std::size_t, std::string_view>> csv_body(
    std::string_view content, std::string_view expected_header) {
  std::vector<std::pair<std::size_t, std::string_view>> body;
  bool header_seen = false;
  const auto lines = text::split_lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::is_comment_or_blank(lines[i])) continue;
    if (!header_seen) {
      const auto fields = text::split(lines[i], ',');
      const auto expected = text::split(expected_header, ',');
      bool ok = fields.size() == expected.size();
      for (std::size_t f = 0; ok && f < fields.size(); ++f) {
        ok = text::to_lower_ascii(text::trim(fields[f])) == expected[f];
      }
      if (!ok) {
        throw Error(ErrorKind::MalformedRow,
                    "expected header '" + std::string(expected_header) + "'", i + 1);
      }
      header_seen = true;
      continue;
    }
    body.emplace_back(i + 1, lines[i]);
  }
  return body;
}

}  // namespace detail

/// Parses a `word,rating` CSV. Duplicate words keep their first row.
inline RatingDataset parse_ratings(std::string_view content, Condition condition) {
  RatingDataset ds;
  ds.condition = std::move(condition);
  std::unordered_set<std::string> seen;
  for (const auto& [line_no, line] : detail::csv_body(content, "word,rating")) {
    const auto fields = text::split(line, ',');
    if (fields.size() != 2) throw Error(ErrorKind::MalformedRow, "expected 2 fields", line_no);
    const std::string word(text::trim(fields[0]));
    if (word.empty()) throw Error(ErrorKind::MalformedRow, "empty word", line_no);
    const auto rating = text::parse_double(fields[1]);
    if (!rating) {
      throw Error(ErrorKind::MalformedRow, "rating '" + std::string(fields[1]) + "'", line_no);
    }
    if (!seen.insert(word).second) {
      ++ds.duplicates_dropped;
      continue;
    }
    ds.rows.push_back({word, *rating});
  }
  if (ds.rows.empty()) throw Error(ErrorKind::EmptyDataset, ds.condition.name());
  return ds;
}

inline RatingDataset load_ratings(const std::filesystem::path& path, Condition condition) {
  return parse_ratings(text::read_file(path), std::move(condition));
}

/// Population z-score (divisor n).
inline RatingDataset zscore(const RatingDataset& dataset) {
  const std::size_t n = dataset.rows.size();
  if (n < 2) throw Error(ErrorKind::TooFewRows, "z-score needs at least 2 rows");
  double mean = 0.0;
  for (const auto& r : dataset.rows) mean += r.gold;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (const auto& r : dataset.rows) var += (r.gold - mean) * (r.gold - mean);
  var /= static_cast<double>(n);
  const double sd = std::sqrt(var);
  if (!(sd > 0.0)) throw Error(ErrorKind::DegenerateRatings, dataset.condition.name());
  RatingDataset out = dataset;
  for (auto& r : out.rows) r.gold = (r.gold - mean) / sd;
  out.normalized = true;
  return out;
}

/// Parses a `negative,positive` CSV.
inline SeedLexicon parse_seed_lexicon(std::string_view content, std::string property = {}) {
  SeedLexicon lex;
  lex.property = std::move(property);
  for (const auto& [line_no, line] : detail::csv_body(content, "negative,positive")) {
    const auto fields = text::split(line, ',');
    if (fields.size() != 2) throw Error(ErrorKind::MalformedRow, "expected 2 fields", line_no);
    SeedPair pair{std::string(text::trim(fields[0])), std::string(text::trim(fields[1]))};
    if (pair.negative.empty() || pair.positive.empty()) {
      throw Error(ErrorKind::MalformedRow, "empty seed word", line_no);
    }
    if (pair.negative == pair.positive) throw Error(ErrorKind::SelfPair, pair.negative, line_no);
    lex.pairs.push_back(std::move(pair));
  }
  if (lex.pairs.empty()) throw Error(ErrorKind::EmptyLexicon, lex.property);
  return lex;
}

inline SeedLexicon load_seed_lexicon(const std::filesystem::path& path, std::string property = {}) {
  return parse_seed_lexicon(text::read_file(path), std::move(property));
}

struct FilterResult {
  RatingDataset dataset;
  std::vector<std::string> dropped;
};

inline FilterResult filter_to_vocabulary(const RatingDataset& dataset, const EmbeddingStore& store) {
  FilterResult result;
  result.dataset.condition = dataset.condition;
  result.dataset.normalized = dataset.normalized;
  result.dataset.duplicates_dropped = dataset.duplicates_dropped;
  for (const auto& row : dataset.rows) {
    if (store.contains(row.word)) {
      result.dataset.rows.push_back(row);
    } else {
      result.dropped.push_back(row.word);
    }
  }
  if (result.dataset.rows.empty()) {
    throw Error(ErrorKind::EmptyAfterFilter, dataset.condition.name());
  }
  return result;
}

struct FoldPlan {
  std::size_t k = 0;
  std::vector<std::size_t> assignments;

  std::vector<std::size_t> test_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
      if (assignments[i] == fold) out.push_back(i);
    }
    return out;
  }
  std::vector<std::size_t> train_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
      if (assignments[i] != fold) out.push_back(i);
    }
    return out;
  }
  std::vector<std::size_t> fold_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t a : assignments) ++sizes[a];
    return sizes;
  }
};

/// Seeded shuffle of 0..n-1, then round-robin dealing into k folds.
inline FoldPlan make_folds(std::size_t n, std::size_t k, std::uint64_t rng_seed) {
  if (k < 2) throw Error(ErrorKind::InvalidArgument, "k must be at least 2");
  if (n < k) {
    throw Error(ErrorKind::TooFewRows,
                std::to_string(n) + " rows for " + std::to_string(k) + " folds");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(rng_seed);
  std::shuffle(order.begin(), order.end(), rng);
  FoldPlan plan{k, std::vector<std::size_t>(n)};
  for (std::size_t pos = 0; pos < n; ++pos) plan.assignments[order[pos]] = pos % k;
  return plan;
}

/// Reassigns golds by a seeded uniform permutation, redrawn until it moves
/// at least one row.
inline RatingDataset scramble_ratings(const RatingDataset& dataset, std::uint64_t rng_seed) {
  const std::size_t n = dataset.rows.size();
  if (n < 2) throw Error(ErrorKind::TooFewRows, "scramble needs at least 2 rows");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(rng_seed);
  const auto is_identity = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      if (perm[i] != i) return false;
    }
    return true;
  };
  do {
    std::shuffle(perm.begin(), perm.end(), rng);
  } while (is_identity());
  RatingDataset out = dataset;
  for (std::size_t i = 0; i < n; ++i) out.rows[i].gold = dataset.rows[perm[i]].gold;
  return out;
}

}  // namespace interpdim
