#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "interpdim/error.hpp"
#include "interpdim/linalg.hpp"
#include "interpdim/text_io.hpp"

namespace interpdim {

struct EmbeddingLoadOptions {
  bool case_fold = true;
  // Off by default: projections already divide by the dimension norm.
  bool normalize_vectors = false;
};

/// Immutable-after-load map from word to a fixed-length vector. Vectors live
/// in one contiguous buffer; lookups hand out views into it.
class EmbeddingStore {
 public:
  explicit EmbeddingStore(std::size_t dim, bool case_fold = false)
      : dim_(dim), case_fold_(case_fold) {
    if (dim == 0) throw Error(ErrorKind::InvalidArgument, "embedding dim must be positive");
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return words_.size(); }
  bool case_folded() const noexcept { return case_fold_; }
  const std::vector<std::string>& words() const noexcept { return words_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  /// Adds a word. Returns false (and keeps the existing vector) when the
  /// normalized word is already present.
  bool insert(std::string_view word, std::span<const double> vector) {
    if (word.empty()) throw Error(ErrorKind::InvalidArgument, "empty word");
    if (vector.size() != dim_) {
      throw Error(ErrorKind::DimensionMismatch,
                  "vector for '" + std::string(word) + "' has " +
                      std::to_string(vector.size()) + " components, expected " +
                      std::to_string(dim_));
    }
    if (!all_finite(vector)) {
      throw Error(ErrorKind::MalformedFloat, "non-finite component for '" + std::string(word) + "'");
    }
    std::string key = normalize(word);
    if (index_.contains(key)) return false;
    index_.emplace(key, words_.size());
    words_.push_back(std::move(key));
    data_.insert(data_.end(), vector.begin(), vector.end());
    return true;
  }

  /// Absent words yield std::nullopt, never a default vector.
  std::optional<std::span<const double>> lookup(std::string_view word) const {
    const auto it = index_.find(normalize(word));
    if (it == index_.end()) return std::nullopt;
    return std::span<const double>(data_.data() + it->second * dim_, dim_);
  }

  bool contains(std::string_view word) const { return index_.contains(normalize(word)); }

  void add_warning(std::string message) { warnings_.push_back(std::move(message)); }

  void normalize_all() {
    for (std::size_t i = 0; i < words_.size(); ++i) {
      std::span<double> v(data_.data() + i * dim_, dim_);
      const double n = norm(v);
      if (n > kZeroNormTolerance) {
        for (double& x : v) x /= n;
      }
    }
  }

 private:
  std::string normalize(std::string_view word) const {
    return case_fold_ ? text::to_lower_ascii(word) : std::string(word);
  }

  std::size_t dim_;
  bool case_fold_;
  std::vector<std::string> words_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> warnings_;
};

/// Parses `word v1 v2 ... vD` lines. The first non-blank line fixes D.
inline EmbeddingStore parse_embeddings(std::string_view content,
                                       const EmbeddingLoadOptions& options = {}) {
  std::optional<EmbeddingStore> store;
  std::vector<double> values;
  std::size_t duplicates = 0;
  const auto lines = text::split_lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const auto tokens = text::split_whitespace(lines[i]);
    if (tokens.empty()) continue;
    const std::size_t count = tokens.size() - 1;
    if (!store) {
      if (count == 0) throw Error(ErrorKind::InconsistentDimensionality, "no vector components", line_no);
      store.emplace(count, options.case_fold);
    } else if (count != store->dim()) {
      throw Error(ErrorKind::InconsistentDimensionality,
                  "expected " + std::to_string(store->dim()) + " components, found " +
                      std::to_string(count),
                  line_no);
    }
    values.clear();
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const auto v = text::parse_double(tokens[t]);
      if (!v) throw Error(ErrorKind::MalformedFloat, "'" + std::string(tokens[t]) + "'", line_no);
      values.push_back(*v);
    }
    if (!store->insert(tokens[0], values)) {
      ++duplicates;
      store->add_warning("duplicate word '" + std::string(tokens[0]) + "' on line " +
                         std::to_string(line_no) + " ignored");
    }
  }
  if (!store) throw Error(ErrorKind::EmptyFile, "no embedding lines");
  if (duplicates > 0) {
    store->add_warning(std::to_string(duplicates) + " duplicate word(s) ignored");
  }
  if (options.normalize_vectors) store->normalize_all();
  return std::move(*store);
}

inline EmbeddingStore load_embeddings(const std::filesystem::path& path,
                                      const EmbeddingLoadOptions& options = {}) {
  return parse_embeddings(text::read_file(path), options);
}

/// Writes the text format back out using shortest round-trip decimals.
inline std::string format_embeddings(const EmbeddingStore& store) {
  std::string out;
  for (const auto& word : store.words()) {
    out += word;
    const auto vector = *store.lookup(word);
    for (double x : vector) {
      out += ' ';
      out += text::format_double(x);
    }
    out += '\n';
  }
  return out;
}

}  // namespace interpdim
