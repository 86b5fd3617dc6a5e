#include <catch2/catch_amalgamated.hpp>

#include <zlib.h>

#include <random>

#include "interpdim/embeddings.hpp"
#include "test_support.hpp"

using namespace interpdim;
using interpdim::testing::kind_of;
using interpdim::testing::TempDir;

namespace {

Vector as_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_CASE("load_embeddings parses word and float columns") {
  TempDir dir;
  const auto store = load_embeddings(dir.write("v.txt", "a 1.0 2.0\nb 3.0 4.0\n"));
  CHECK(store.dim() == 2);
  CHECK(store.size() == 2);
  CHECK(as_vector(*store.lookup("a")) == Vector{1.0, 2.0});
  CHECK(as_vector(*store.lookup("b")) == Vector{3.0, 4.0});
}

TEST_CASE("load_embeddings rejects malformed files") {
  SECTION("inconsistent dimensionality reports the line") {
    try {
      parse_embeddings("a 1.0\nb 2.0 3.0\n");
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InconsistentDimensionality);
      CHECK(e.line() == 2u);
    }
  }
  SECTION("malformed float") {
    try {
      parse_embeddings("a 1.0 2.0\n\nb 3.0 x4\n");
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::MalformedFloat);
      CHECK(e.line() == 3u);
    }
  }
  SECTION("non-finite values are malformed") {
    CHECK(kind_of([] { parse_embeddings("a nan 1\n"); }) == ErrorKind::MalformedFloat);
    CHECK(kind_of([] { parse_embeddings("a inf 1\n"); }) == ErrorKind::MalformedFloat);
  }
  SECTION("empty file") {
    CHECK(kind_of([] { parse_embeddings(""); }) == ErrorKind::EmptyFile);
    CHECK(kind_of([] { parse_embeddings("\n  \n"); }) == ErrorKind::EmptyFile);
  }
  SECTION("missing file") {
    CHECK(kind_of([] { load_embeddings("/nonexistent/vectors.txt"); }) == ErrorKind::Io);
  }
}

TEST_CASE("case folding applies to stored words and to lookups") {
  const auto folded = parse_embeddings("Dog 0.5 0.5\nA 1 2\n", {.case_fold = true});
  CHECK(as_vector(*folded.lookup("dog")) == Vector{0.5, 0.5});
  CHECK(as_vector(*folded.lookup("A")) == Vector{1.0, 2.0});
  CHECK(as_vector(*folded.lookup("a")) == Vector{1.0, 2.0});

  const auto raw = parse_embeddings("Dog 0.5 0.5\n", {.case_fold = false});
  CHECK_FALSE(raw.lookup("dog").has_value());
  CHECK(raw.lookup("Dog").has_value());
}

TEST_CASE("duplicates after folding keep the first occurrence and warn") {
  const auto store = parse_embeddings("cat 1 1\nCat 2 2\ncat 3 3\n", {.case_fold = true});
  CHECK(store.size() == 1);
  CHECK(as_vector(*store.lookup("cat")) == Vector{1.0, 1.0});
  CHECK_FALSE(store.warnings().empty());
}

TEST_CASE("lookup of an unknown word is absent") {
  const auto store = parse_embeddings("a 1 2\n");
  CHECK(as_vector(*store.lookup("a")) == Vector{1.0, 2.0});
  CHECK_FALSE(store.lookup("zzz").has_value());
  // Repeated lookups view the same storage.
  CHECK(store.lookup("a")->data() == store.lookup("a")->data());
}

TEST_CASE("vectors are raw unless normalization is requested") {
  const auto raw = parse_embeddings("a 3 4\n");
  CHECK(as_vector(*raw.lookup("a")) == Vector{3.0, 4.0});
  const auto unit = parse_embeddings("a 3 4\n", {.normalize_vectors = true});
  CHECK(as_vector(*unit.lookup("a")) == Vector{0.6, 0.8});
}

TEST_CASE("gzip files are inflated by extension") {
  TempDir dir;
  const auto path = dir.path() / "v.txt.gz";
  const std::string content = "a 1.5 -2\nb 0 0.25\n";
  gzFile gz = gzopen(path.string().c_str(), "wb");
  REQUIRE(gz != nullptr);
  gzwrite(gz, content.data(), static_cast<unsigned>(content.size()));
  gzclose(gz);
  const auto store = load_embeddings(path);
  CHECK(store.dim() == 2);
  CHECK(as_vector(*store.lookup("b")) == Vector{0.0, 0.25});
}

TEST_CASE("write and reload round-trips exactly and loading is deterministic") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal(0.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    EmbeddingStore store(7);
    for (int w = 0; w < 25; ++w) {
      Vector v(7);
      for (double& x : v) x = normal(rng);
      store.insert("w" + std::to_string(w), v);
    }
    const std::string text = format_embeddings(store);
    const auto again = parse_embeddings(text, {.case_fold = false});
    const auto third = parse_embeddings(text, {.case_fold = false});
    REQUIRE(again.size() == store.size());
    for (const auto& w : store.words()) {
      CHECK(as_vector(*again.lookup(w)) == as_vector(*store.lookup(w)));
      CHECK(as_vector(*third.lookup(w)) == as_vector(*again.lookup(w)));
    }
  }
}
