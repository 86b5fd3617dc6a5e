#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace interpdim {

enum class ErrorKind {
  Io,
  EmptyFile,
  InconsistentDimensionality,
  MalformedFloat,
  MalformedRow,
  EmptyDataset,
  DegenerateRatings,
  EmptyLexicon,
  SelfPair,
  EmptyAfterFilter,
  TooFewRows,
  MissingSeedWord,
  DimensionMismatch,
  ZeroDirection,
  ZeroVector,
  NonFiniteLoss,
  DegenerateFit,
  FewerThanTwoWords,
  InvalidConfig,
  InvalidArgument,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return "Io";
    case ErrorKind::EmptyFile: return "EmptyFile";
    case ErrorKind::InconsistentDimensionality: return "InconsistentDimensionality";
    case ErrorKind::MalformedFloat: return "MalformedFloat";
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::DegenerateRatings: return "DegenerateRatings";
    case ErrorKind::EmptyLexicon: return "EmptyLexicon";
    case ErrorKind::SelfPair: return "SelfPair";
    case ErrorKind::EmptyAfterFilter: return "EmptyAfterFilter";
    case ErrorKind::TooFewRows: return "TooFewRows";
    case ErrorKind::MissingSeedWord: return "MissingSeedWord";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ZeroDirection: return "ZeroDirection";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::DegenerateFit: return "DegenerateFit";
    case ErrorKind::FewerThanTwoWords: return "FewerThanTwoWords";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure raised by the library. `line()` is 1-based and only set
/// for errors tied to a position in an input file.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::size_t> line = std::nullopt)
      : std::runtime_error(format(kind, message, line)),
        kind_(kind),
        line_(line),
        detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  static std::string format(ErrorKind kind, const std::string& message,
                            std::optional<std::size_t> line) {
    std::string out(to_string(kind));
    if (line) out += "(" + std::to_string(*line) + ")";
    if (!message.empty()) out += ": " + message;
    return out;
  }

  ErrorKind kind_;
  std::optional<std::size_t> line_;
  std::string detail_;
};

}  // namespace interpdim
