#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "interpdim/error.hpp"
#include "interpdim/random.hpp"
#include "interpdim/text_io.hpp"

namespace interpdim {

/// Corpus occurrence counts, all strictly positive.
class FrequencyTable {
 public:
  explicit FrequencyTable(bool case_fold = true) : case_fold_(case_fold) {}

  void set(std::string_view word, double count) {
    if (!(count > 0.0) || !std::isfinite(count)) {
      throw Error(ErrorKind::InvalidArgument, "count for '" + std::string(word) + "' must be positive");
    }
    counts_[key(word)] = count;
  }

  std::optional<double> count(std::string_view word) const {
    const auto it = counts_.find(key(word));
    if (it == counts_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const noexcept { return counts_.size(); }

 private:
  std::string key(std::string_view word) const {
    return case_fold_ ? text::to_lower_ascii(word) : std::string(word);
  }

  bool case_fold_;
  std::unordered_map<std::string, double> counts_;
};

/// `word<TAB>count` per line; blank and '#' lines skipped. Repeated words
/// keep the first count.
inline FrequencyTable parse_frequency_table(std::string_view content, bool case_fold = true) {
  FrequencyTable table(case_fold);
  const auto lines = text::split_lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::is_comment_or_blank(lines[i])) continue;
    const auto fields = text::split(lines[i], '\t');
    if (fields.size() != 2) throw Error(ErrorKind::MalformedRow, "expected word<TAB>count", i + 1);
    const auto word = text::trim(fields[0]);
    const auto count = text::parse_double(fields[1]);
    if (word.empty() || !count || !(*count > 0.0)) {
      throw Error(ErrorKind::MalformedRow, "bad frequency entry", i + 1);
    }
    if (!table.count(word)) table.set(word, *count);
  }
  return table;
}

inline FrequencyTable load_frequency_table(const std::filesystem::path& path, bool case_fold = true) {
  return parse_frequency_table(text::read_file(path), case_fold);
}

struct FrequencyScores {
  std::vector<double> scores;
  std::size_t misses = 0;
};

/// ln(count); words missing from the table score ln(1) = 0.
inline FrequencyScores frequency_scores(std::span<const std::string> words, const FrequencyTable& table) {
  FrequencyScores out;
  out.scores.reserve(words.size());
  for (const auto& w : words) {
    if (const auto c = table.count(w)) {
      out.scores.push_back(std::log(*c));
    } else {
      out.scores.push_back(0.0);
      ++out.misses;
    }
  }
  return out;
}

// Gold ratings are z-scores, hence the [-3, 3] range.
inline constexpr double kRandomScoreBound = 3.0;

inline std::vector<double> random_scores(std::size_t count, std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  std::uniform_real_distribution<double> dist(-kRandomScoreBound, kRandomScoreBound);
  std::vector<double> out(count);
  for (double& x : out) x = dist(rng);
  return out;
}

}  // namespace interpdim
