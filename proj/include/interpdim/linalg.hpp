#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "interpdim/error.hpp"

namespace interpdim {

using Vector = std::vector<double>;

// Directions with a norm at or below this are treated as zero.
inline constexpr double kZeroNormTolerance = 1e-12;

inline void require_same_size(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  require_same_size(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

inline double norm(std::span<const double> a) {
  double sum = 0.0;
  for (double x : a) sum += x * x;
  return std::sqrt(sum);
}

inline double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na <= kZeroNormTolerance || nb <= kZeroNormTolerance) {
    throw Error(ErrorKind::ZeroVector, "cosine of a zero vector");
  }
  return dot(a, b) / (na * nb);
}

inline bool all_finite(std::span<const double> a) {
  for (double x : a) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline Vector subtract(std::span<const double> a, std::span<const double> b) {
  require_same_size(a, b);
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

inline Vector mean_of(const std::vector<Vector>& vectors) {
  if (vectors.empty()) return {};
  Vector out(vectors.front().size(), 0.0);
  for (const auto& v : vectors) {
    require_same_size(out, v);
    axpy(1.0, v, out);
  }
  for (double& x : out) x /= static_cast<double>(vectors.size());
  return out;
}

}  // namespace interpdim
