#include <gtest/gtest.h>

#include <set>

#include "mcaeeg/random.hpp"
#include "mcaeeg/tensor.hpp"
#include "support/oracles.hpp"

using namespace mcaeeg;

TEST(Tensor, ConstructionAndIndexing) {
  Tensor t({2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rank(), 2u);
  t.at(1, 2) = 4.0;
  EXPECT_DOUBLE_EQ(t[5], 4.0);
  EXPECT_THROW(Tensor({2, 0}), ShapeError);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>(3)), ShapeError);
}

TEST(Tensor, FromRowsRejectsRagged) {
  auto t = Tensor::from_rows({{1, 2}, {3, 4}});
  EXPECT_DOUBLE_EQ(t.at(1, 0), 3.0);
  EXPECT_THROW(Tensor::from_rows({{1, 2}, {3}}), ShapeError);
}

TEST(Tensor, MatmulMatchesTripleLoop) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 1 + rng.below(9), k = 1 + rng.below(40), n = 1 + rng.below(9);
    Tensor a = oracle::random_tensor({m, k}, rng), b = oracle::random_tensor({k, n}, rng);
    Tensor got = matmul(a, b), want = oracle::matmul(a, b);
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
  EXPECT_THROW(matmul(Tensor({2, 3}), Tensor({2, 3})), ShapeError);
}

TEST(Tensor, PairwiseSumOfEqualTermsIsExactForPowersOfTwo) {
  std::vector<double> v(32, 0.1);
  EXPECT_EQ(pairwise_sum(v), 32 * 0.1);
}

TEST(Tensor, SoftmaxRowsSumToOne) {
  Rng rng(3);
  Tensor x = oracle::random_tensor({7, 13}, rng, 10.0);
  Tensor s = softmax_rows(x);
  for (std::size_t i = 0; i < 7; ++i) {
    double total = 0;
    for (std::size_t j = 0; j < 13; ++j) {
      EXPECT_GE(s.at(i, j), 0.0);
      total += s.at(i, j);
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Tensor, SoftmaxIsStableForHugeLogits) {
  Tensor x = Tensor::from_rows({{1000.0, 1000.0, -1000.0}});
  Tensor s = softmax_rows(x);
  EXPECT_NEAR(s.at(0, 0), 0.5, 1e-15);
  EXPECT_EQ(s.at(0, 2), 0.0);
}

TEST(Tensor, SliceTimeAndReshape) {
  Tensor t({2, 1, 4});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
  Tensor s = slice_time(t, 1, 3);
  EXPECT_EQ(s.shape(), (Shape{2, 1, 2}));
  EXPECT_DOUBLE_EQ(s.at(1, 0, 0), 5.0);
  EXPECT_THROW(slice_time(t, 3, 3), ShapeError);
  EXPECT_THROW(reshape(t, {3, 3}), ShapeError);
}

TEST(Rng, DeterministicAndInRange) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  Rng r(5);
  std::set<std::size_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const double u = r.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    seen.insert(r.below(7));
  }
  EXPECT_EQ(seen.size(), 7u);
}

TEST(Rng, NormalMoments) {
  Rng r(9);
  const int n = 200000;
  double s = 0, ss = 0;
  for (int i = 0; i < n; ++i) {
    const double v = r.normal();
    s += v;
    ss += v * v;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(ss / n, 1.0, 0.01);
}

TEST(Rng, ShuffleIsAPermutation) {
  Rng r(1);
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  r.shuffle(v);
  std::set<int> s(v.begin(), v.end());
  EXPECT_EQ(s.size(), 50u);
  std::vector<int> sorted(v);
  std::sort(sorted.begin(), sorted.end());
  EXPECT_NE(v, sorted);
}
