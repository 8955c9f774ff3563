#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

namespace {

using namespace lazsl;
using lazsl::testing::naive_cosine;
using lazsl::testing::random_unit;
using lazsl::testing::random_units;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected lazsl::Error";
  return ErrorCode::InvalidArgument;
}

TEST(Rng, SplitMixKnownAnswers) {
  SplitMix64 rng(0);
  EXPECT_EQ(rng.next(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(rng.next(), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(rng.next(), 0x06C45D188009454FULL);
}

TEST(Rng, UniformIntStaysInClosedRange) {
  SplitMix64 rng(7);
  bool hit_lo = false, hit_hi = false;
  for (int k = 0; k < 2000; ++k) {
    const auto x = rng.uniform_int(3, 6);
    ASSERT_GE(x, 3u);
    ASSERT_LE(x, 6u);
    hit_lo = hit_lo || x == 3;
    hit_hi = hit_hi || x == 6;
  }
  EXPECT_TRUE(hit_lo && hit_hi);
}

TEST(Normalize, Examples) {
  const auto a = normalize(EmbeddingVector{3.0, 4.0});
  EXPECT_NEAR(a[0], 0.6, 1e-15);
  EXPECT_NEAR(a[1], 0.8, 1e-15);

  const auto b = normalize(EmbeddingVector{1.0, 0.0, 0.0});
  EXPECT_EQ(b[0], 1.0);
  EXPECT_EQ(b[1], 0.0);
  EXPECT_EQ(b[2], 0.0);

  EXPECT_EQ(code_of([] { (void)normalize(EmbeddingVector{0.0, 0.0}); }), ErrorCode::ZeroVector);
}

TEST(Normalize, Idempotent) {
  SplitMix64 rng(1);
  for (int k = 0; k < 100; ++k) {
    EmbeddingVector v(lazsl::testing::gaussian(rng, 17));
    const auto once = normalize(v);
    const auto twice = normalize(once);
    for (std::size_t d = 0; d < v.dim(); ++d) ASSERT_NEAR(once[d], twice[d], 1e-9);
  }
}

TEST(Normalize, HugeAndTinyInputsStayFinite) {
  const auto big = normalize(EmbeddingVector{3e200, 4e200});
  EXPECT_NEAR(big[0], 0.6, 1e-12);
  const auto small = normalize(EmbeddingVector{3e-200, 4e-200});
  EXPECT_NEAR(small[1], 0.8, 1e-12);
}

TEST(Embedding, RejectsNonFiniteAndEmpty) {
  EXPECT_EQ(code_of([] { EmbeddingVector v{1.0, NAN}; }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { EmbeddingVector v(std::vector<double>{}); }), ErrorCode::InvalidArgument);
}

TEST(Cosine, Examples) {
  EXPECT_NEAR(cosine({1.0, 0.0}, {0.0, 1.0}), 0.0, 1e-15);
  EXPECT_NEAR(cosine({1.0, 0.0}, {1.0, 0.0}), 1.0, 1e-15);
  EXPECT_NEAR(cosine({0.6, 0.8}, {1.0, 0.0}), 0.6, 1e-15);
}

TEST(Cosine, Errors) {
  EXPECT_EQ(code_of([] { (void)cosine({1.0, 0.0}, {1.0, 0.0, 0.0}); }), ErrorCode::DimensionMismatch);
  EXPECT_EQ(code_of([] { (void)cosine({0.0, 0.0}, {1.0, 0.0}); }), ErrorCode::ZeroVector);
}

TEST(Cosine, ScaleInvariantAndBounded) {
  SplitMix64 rng(2);
  for (int k = 0; k < 200; ++k) {
    const auto a = lazsl::testing::gaussian(rng, 9);
    const auto b = lazsl::testing::gaussian(rng, 9);
    const double s = std::exp(rng.uniform(-20.0, 20.0));
    std::vector<double> as = a;
    for (double& x : as) x *= s;
    const double base = cosine(EmbeddingVector(a), EmbeddingVector(b));
    ASSERT_NEAR(base, cosine(EmbeddingVector(as), EmbeddingVector(b)), 1e-9);
    ASSERT_NEAR(base, cosine(EmbeddingVector(b), EmbeddingVector(as)), 1e-9);
    ASSERT_LE(std::abs(base), 1.0);
  }
}

TEST(SimilarityMatrix, OrthonormalExample) {
  const std::vector<EmbeddingVector> regions{{1.0, 0.0}};
  const std::vector<EmbeddingVector> attrs{{1.0, 0.0}, {0.0, 1.0}};
  const auto sim = similarity_matrix(regions, attrs);
  ASSERT_EQ(sim.rows(), 1u);
  ASSERT_EQ(sim.cols(), 2u);
  EXPECT_NEAR(sim(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(sim(0, 1), 0.0, 1e-15);
}

TEST(SimilarityMatrix, DuplicateRegionsGiveIdenticalRows) {
  SplitMix64 rng(3);
  const auto r = random_unit(rng, 8);
  const std::vector<EmbeddingVector> regions{r, r};
  const auto attrs = random_units(rng, 5, 8);
  const auto sim = similarity_matrix(regions, attrs);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(sim(0, j), sim(1, j));
}

TEST(SimilarityMatrix, MatchesScalarLoop) {
  SplitMix64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_units(rng, 3, 12);
    const auto q = random_units(rng, 4, 12);
    const auto sim = similarity_matrix(p, q);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 4; ++j) ASSERT_NEAR(sim(i, j), naive_cosine(p[i], q[j]), 1e-9);
  }
}

TEST(SimilarityMatrix, TransposeSymmetry) {
  SplitMix64 rng(5);
  const auto p = random_units(rng, 7, 10);
  const auto q = random_units(rng, 4, 10);
  const auto pq = similarity_matrix(p, q);
  const auto qp = similarity_matrix(q, p).transposed();
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 4; ++j) ASSERT_NEAR(pq(i, j), qp(i, j), 1e-9);
}

TEST(SimilarityMatrix, EmptyInputIsShapeMismatch) {
  const std::vector<EmbeddingVector> none;
  const std::vector<EmbeddingVector> one{{1.0}};
  EXPECT_EQ(code_of([&] { (void)similarity_matrix(none, one); }), ErrorCode::ShapeMismatch);
}

TEST(Frobenius, MatchesLoopAndChecksShape) {
  const PlanMatrix t{{0.1, 0.2}, {0.3, 0.4}};
  const SimilarityMatrix s{{1.0, -1.0}, {0.5, 2.0}};
  EXPECT_NEAR(frobenius(t, s), 0.1 - 0.2 + 0.15 + 0.8, 1e-15);
  const SimilarityMatrix wrong{{1.0, 2.0}};
  EXPECT_EQ(code_of([&] { (void)frobenius(t, wrong); }), ErrorCode::ShapeMismatch);
}

TEST(DenseMatrix, BufferSizeChecked) {
  EXPECT_EQ(code_of([] { CostMatrix c(2, 3, std::vector<double>(5)); }), ErrorCode::ShapeMismatch);
}

TEST(VisionSet, NormalizesAndValidates) {
  const VisionSet v("x", EmbeddingVector{2.0, 0.0}, {EmbeddingVector{0.0, 5.0}});
  EXPECT_NEAR(v.global()[0], 1.0, 1e-15);
  EXPECT_NEAR(v.regions()[0][1], 1.0, 1e-15);
  EXPECT_EQ(code_of([] { VisionSet bad("x", EmbeddingVector{1.0, 0.0}, {}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { VisionSet bad("x", EmbeddingVector{1.0, 0.0}, {EmbeddingVector{1.0}}); }),
            ErrorCode::DimensionMismatch);
}

TEST(SemanticSet, NormalizesAndValidates) {
  const SemanticSet s("c", "cat", {{"whiskers", EmbeddingVector{0.0, 3.0}}});
  EXPECT_NEAR(s.embeddings()[0][1], 1.0, 1e-15);
  EXPECT_EQ(s.texts()[0], "whiskers");
  EXPECT_EQ(code_of([] { SemanticSet bad("c", "cat", {}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] {
              SemanticSet bad("c", "cat", {{"a", EmbeddingVector{1.0, 0.0}}, {"b", EmbeddingVector{1.0}}});
            }),
            ErrorCode::DimensionMismatch);
}

}  // namespace
