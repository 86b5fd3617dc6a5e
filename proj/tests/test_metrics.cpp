#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "interpdim/metrics.hpp"
#include "test_support.hpp"

using namespace interpdim;
using interpdim::testing::kind_of;

namespace {

// Enumerates every unordered pair with at least one test member.
double brute_extended(const std::vector<double>& g, const std::vector<double>& p, const std::set<std::size_t>& test) {
  std::size_t hits = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = i + 1; j < g.size(); ++j) {
      if (!test.contains(i) && !test.contains(j)) continue;
      ++pairs;
      const bool same = (g[i] - g[j]) * (p[i] - p[j]) > 0.0;
      if (same) ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(pairs);
}

ScoredWords scored(std::vector<double> g, std::vector<double> p, std::vector<std::size_t> test) {
  ScoredWords s;
  s.gold = std::move(g);
  s.predicted = std::move(p);
  s.test_indices = std::move(test);
  return s;
}

}  // namespace

TEST_CASE("rank_match counts strict agreement only") {
  CHECK(rank_match(1, 2, 10, 20) == 1);
  CHECK(rank_match(2, 1, 20, 10) == 1);
  CHECK(rank_match(1, 2, 20, 10) == 0);
  CHECK(rank_match(1, 1, 10, 20) == 0);
  CHECK(rank_match(1, 2, 5, 5) == 0);
}

TEST_CASE("pairwise accuracy on a three-word example") {
  const std::vector<double> g{1, 2, 3};
  const std::vector<double> p{1, 3, 2};
  CHECK(pairwise_rank_accuracy(g, p) == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("pairwise accuracy with a prediction tie") {
  const std::vector<double> g{1, 2};
  const std::vector<double> p{0, 0};
  CHECK(pairwise_rank_accuracy(g, p) == 0.0);
  const std::vector<double> g4{1, 2, 3, 4};
  const std::vector<double> p4{1, 1, 3, 2};
  // Pairs: (0,1) tie, (0,2) ok, (0,3) ok, (1,2) ok, (1,3) ok, (2,3) wrong.
  CHECK(pairwise_rank_accuracy(g4, p4) == Catch::Approx(4.0 / 6.0));
}

TEST_CASE("extended accuracy over a single test word") {
  // Test word 0 against three training words, one ordered wrongly.
  const auto s = scored({0, 1, 2, 3}, {0, 1, -1, 3}, {0});
  CHECK(extended_rank_accuracy(s) == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("extended accuracy equals pairwise when every word is a test word") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> g(9), p(9);
    for (auto& x : g) x = normal(rng);
    for (auto& x : p) x = normal(rng);
    const auto s = scored(g, p, {0, 1, 2, 3, 4, 5, 6, 7, 8});
    CHECK(extended_rank_accuracy(s) == Catch::Approx(pairwise_rank_accuracy(g, p)).epsilon(1e-15));
  }
}

TEST_CASE("extended accuracy matches brute-force enumeration") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> small(0, 4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 11);
    std::vector<double> g(n), p(n);
    // Small integer values so ties are common.
    for (auto& x : g) x = small(rng);
    for (auto& x : p) x = small(rng);
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t l = 1 + static_cast<std::size_t>(rng() % n);
    idx.resize(l);
    const auto s = scored(g, p, idx);
    CHECK(extended_rank_accuracy(s) == brute_extended(g, p, {idx.begin(), idx.end()}));
  }
}

TEST_CASE("rank accuracies are invariant to strictly increasing transforms") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  std::vector<double> g(12), p(12);
  for (auto& x : g) x = normal(rng);
  for (auto& x : p) x = normal(rng);
  std::vector<double> q;
  for (double x : p) q.push_back(std::exp(3.0 * x) + 7.0);
  CHECK(pairwise_rank_accuracy(g, p) == pairwise_rank_accuracy(g, q));
  CHECK(extended_rank_accuracy(scored(g, p, {1, 4, 7})) == extended_rank_accuracy(scored(g, q, {1, 4, 7})));
}

TEST_CASE("reversing the prediction complements accuracy without ties") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  std::vector<double> g(10), p(10);
  for (auto& x : g) x = normal(rng);
  for (auto& x : p) x = normal(rng);
  std::vector<double> neg;
  for (double x : p) neg.push_back(-x);
  CHECK(pairwise_rank_accuracy(g, p) + pairwise_rank_accuracy(g, neg) == Catch::Approx(1.0));
}

TEST_CASE("accuracy errors") {
  const std::vector<double> one{1.0};
  const std::vector<double> two{1.0, 2.0};
  CHECK(kind_of([&] { pairwise_rank_accuracy(one, one); }) == ErrorKind::TooFewRows);
  CHECK(kind_of([&] { pairwise_rank_accuracy(one, two); }) == ErrorKind::DimensionMismatch);
  CHECK(kind_of([&] { extended_rank_accuracy(scored({1, 2}, {1, 2}, {})); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([&] { extended_rank_accuracy(scored({1, 2}, {1, 2}, {5})); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([&] { extended_rank_accuracy(scored({1, 2}, {1, 2}, {0, 0})); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("mse restricted to the test fold") {
  const auto s = scored({0, 0, 0, 0}, {1, 2, 3, 100}, {0, 2});
  CHECK(mse(s, true) == Catch::Approx((1.0 + 9.0) / 2.0));
  CHECK(mse(s, false) == Catch::Approx((1.0 + 4.0 + 9.0 + 10000.0) / 4.0));
  CHECK(mse(scored({1, 2}, {1, 2}, {0, 1}), true) == 0.0);
}

TEST_CASE("mse example with two test words") {
  CHECK(mse(scored({1, -1, 5}, {2, 1, 5}, {0, 1}), true) == Catch::Approx(2.5));
}

TEST_CASE("calibration recovers an exact line") {
  const std::vector<double> x{0, 1};
  const std::vector<double> y{2, 4};
  const auto cal = fit_calibration(x, y);
  CHECK(cal.slope == Catch::Approx(2.0));
  CHECK(cal.intercept == Catch::Approx(2.0));
  CHECK_FALSE(cal.degenerate);
  CHECK(apply_calibration(cal, 3.0) == Catch::Approx(8.0));
}

TEST_CASE("constant predictor falls back to mean gold") {
  const std::vector<double> x{5, 5, 5};
  const std::vector<double> y{1, 2, 6};
  const auto cal = fit_calibration(x, y);
  CHECK(cal.degenerate);
  CHECK(cal.slope == 0.0);
  CHECK(cal.intercept == Catch::Approx(3.0));
}

TEST_CASE("calibration minimizes squared error") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal;
  std::vector<double> x(30), y(30);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = normal(rng);
    y[i] = 0.7 * x[i] - 0.3 + 0.5 * normal(rng);
  }
  const auto cal = fit_calibration(x, y);
  const auto sse = [&](double a, double b) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::pow(a * x[i] + b - y[i], 2);
    return s;
  };
  const double best = sse(cal.slope, cal.intercept);
  for (double da : {-0.01, 0.01}) {
    for (double db : {-0.01, 0.0, 0.01}) CHECK(sse(cal.slope + da, cal.intercept + db) > best);
  }
  // Calibrated mse is never worse than the identity map.
  CHECK(best <= sse(1.0, 0.0));
}
