#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "interpdim/dimensions.hpp"
#include "interpdim/embeddings.hpp"
#include "interpdim/error.hpp"
#include "interpdim/text_io.hpp"

namespace interpdim {

struct ProjectedWord {
  std::string word;
  double x = 0.0;
  double y = 0.0;
  std::optional<double> gold;
};

struct ProjectedArrow {
  std::string label;
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;
  // The direction is (numerically) orthogonal to the plane.
  bool degenerate = false;
};

struct ProjectionOutput {
  std::vector<ProjectedWord> rows;
  std::vector<ProjectedArrow> arrows;
  Vector axis1;
  Vector axis2;
  double variance1 = 0.0;
  double variance2 = 0.0;
  // Covariance rank < 2: axis2 is an arbitrary unit vector orthogonal to axis1.
  bool rank_deficient = false;
};

struct LabeledDimension {
  std::string label;
  Dimension dimension;
};

namespace detail {

// Flip so the largest-magnitude loading is positive.
inline void orient(Eigen::VectorXd& v) {
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v(arg) < 0) v = -v;
}

}  // namespace detail

/// Centers the word vectors, takes the top two principal axes of their
/// covariance by exact symmetric eigendecomposition, and projects words and
/// dimension directions onto them. Arrows start at the centroid, are unit
/// length in the plane, then scaled to the farthest word.
inline ProjectionOutput project_words(std::span<const std::string> words,
                                      std::span<const std::optional<double>> golds,
                                      const EmbeddingStore& store,
                                      std::span<const LabeledDimension> dimensions) {
  if (!golds.empty() && golds.size() != words.size()) {
    throw Error(ErrorKind::DimensionMismatch, "words and golds differ in length");
  }
  if (words.size() < 2) throw Error(ErrorKind::FewerThanTwoWords, std::to_string(words.size()) + " word(s)");
  const auto n = static_cast<Eigen::Index>(words.size());
  const auto dim = static_cast<Eigen::Index>(store.dim());

  Eigen::MatrixXd x(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto v = store.lookup(words[static_cast<std::size_t>(i)]);
    if (!v) throw Error(ErrorKind::InvalidArgument, "word '" + words[static_cast<std::size_t>(i)] + "' not in embeddings");
    for (Eigen::Index j = 0; j < dim; ++j) x(i, j) = (*v)[static_cast<std::size_t>(j)];
  }
  const Eigen::RowVectorXd centroid = x.colwise().mean();
  x.rowwise() -= centroid;

  ProjectionOutput out;
  Eigen::VectorXd a1 = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd a2 = Eigen::VectorXd::Zero(dim);
  if (dim == 1) {
    a1(0) = 1.0;
    out.variance1 = x.squaredNorm() / static_cast<double>(n);
    out.rank_deficient = true;
  } else {
    const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw Error(ErrorKind::InvalidArgument, "eigendecomposition failed");
    // Eigenvalues come back in ascending order.
    a1 = solver.eigenvectors().col(dim - 1);
    a2 = solver.eigenvectors().col(dim - 2);
    out.variance1 = std::max(0.0, solver.eigenvalues()(dim - 1));
    out.variance2 = std::max(0.0, solver.eigenvalues()(dim - 2));
    const double tol = 1e-12 * std::max(out.variance1, 1e-300);
    out.rank_deficient = out.variance2 <= tol || out.variance1 <= 1e-300;
    detail::orient(a1);
    detail::orient(a2);
  }
  out.axis1.assign(a1.data(), a1.data() + dim);
  out.axis2.assign(a2.data(), a2.data() + dim);

  const Eigen::VectorXd px = x * a1;
  const Eigen::VectorXd py = x * a2;
  double radius = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    ProjectedWord row;
    row.word = words[static_cast<std::size_t>(i)];
    row.x = px(i);
    row.y = py(i);
    if (!golds.empty()) row.gold = golds[static_cast<std::size_t>(i)];
    radius = std::max(radius, std::hypot(row.x, row.y));
    out.rows.push_back(std::move(row));
  }
  if (!(radius > 0.0)) radius = 1.0;

  for (const auto& labeled : dimensions) {
    const auto& d = labeled.dimension.direction;
    if (d.size() != store.dim()) {
      throw Error(ErrorKind::DimensionMismatch, labeled.label + ": direction has " + std::to_string(d.size()) +
                                                    " components, embeddings have " + std::to_string(store.dim()));
    }
    const Eigen::Map<const Eigen::VectorXd> dv(d.data(), dim);
    const double dn = dv.norm();
    if (!(dn > kZeroNormTolerance)) throw Error(ErrorKind::ZeroDirection, labeled.label);
    const double u = dv.dot(a1) / dn;
    const double v = dv.dot(a2) / dn;
    const double len = std::hypot(u, v);
    ProjectedArrow arrow;
    arrow.label = labeled.label;
    if (len > 1e-12) {
      arrow.x1 = u / len * radius;
      arrow.y1 = v / len * radius;
    } else {
      arrow.degenerate = true;
    }
    out.arrows.push_back(std::move(arrow));
  }
  return out;
}

/// kind,label,x0,y0,x1,y1,gold,flag. Word rows put their coordinates in
/// x0,y0; arrow rows run from (x0,y0) to (x1,y1).
inline std::string projection_csv(const ProjectionOutput& p) {
  std::string out = "kind,label,x0,y0,x1,y1,gold,flag\n";
  const std::string word_flag = p.rank_deficient ? "RANK_DEFICIENT" : "";
  for (const auto& r : p.rows) {
    out += "word," + r.word + ',' + text::format_double(r.x) + ',' + text::format_double(r.y) + ",,," +
           (r.gold ? text::format_double(*r.gold) : "") + ',' + word_flag + '\n';
  }
  for (const auto& a : p.arrows) {
    out += "arrow," + a.label + ',' + text::format_double(a.x0) + ',' + text::format_double(a.y0) + ',' +
           text::format_double(a.x1) + ',' + text::format_double(a.y1) + ",," +
           (a.degenerate ? "OFF_PLANE" : "") + '\n';
  }
  return out;
}

}  // namespace interpdim
