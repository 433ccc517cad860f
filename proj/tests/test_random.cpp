#include "mbsm/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace {

TEST(Rng, SameSeedSameStream) {
  mbsm::Rng a(42);
  mbsm::Rng b(42);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(a.next(), b.next());
  }
}

TEST(Rng, UniformRangeAndMean) {
  mbsm::Rng rng(7);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 5e-3);
}

TEST(Rng, NormalMomentsMatchStandard) {
  mbsm::Rng rng(11);
  double sum = 0.0;
  double sq_sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq_sum += x * x;
  }
  EXPECT_NEAR(sum / n, 0.0, 1e-2);
  EXPECT_NEAR(sq_sum / n, 1.0, 2e-2);
}

TEST(Rng, PoissonMeanMatchesRate) {
  mbsm::Rng rng(13);
  for (const double mean : {0.1, 1.0, 2.0}) {
    long total = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) total += rng.poisson(mean);
    EXPECT_NEAR(static_cast<double>(total) / n, mean, 0.05 * std::max(mean, 0.2));
  }
  EXPECT_EQ(rng.poisson(0.0), 0);
}

TEST(Rng, UniformIntBounds) {
  mbsm::Rng rng(17);
  std::vector<int> histogram(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const int v = rng.uniform_int(7);
    ASSERT_GE(v, 0);
    ASSERT_LT(v, 7);
    ++histogram[static_cast<std::size_t>(v)];
  }
  for (const int count : histogram) {
    EXPECT_NEAR(count, 10000, 500);
  }
}

TEST(Rng, DeriveSeedSeparatesStreams) {
  const std::uint64_t a = mbsm::derive_seed(1, 2, 3);
  const std::uint64_t b = mbsm::derive_seed(1, 2, 4);
  const std::uint64_t c = mbsm::derive_seed(1, 3, 3);
  EXPECT_NE(a, b);
  EXPECT_NE(a, c);
  EXPECT_EQ(a, mbsm::derive_seed(1, 2, 3));
}

TEST(Rng, ShuffleIsDeterministicPermutation) {
  mbsm::Rng rng(23);
  std::vector<int> values{0, 1, 2, 3, 4, 5, 6, 7};
  rng.shuffle(values);
  std::vector<int> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, (std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7}));
  mbsm::Rng rng2(23);
  std::vector<int> values2{0, 1, 2, 3, 4, 5, 6, 7};
  rng2.shuffle(values2);
  EXPECT_EQ(values, values2);
}

}  // namespace
