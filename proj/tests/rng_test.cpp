#include "pmeas/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using pmeas::Rng;

TEST(Rng, SameSeedSameSequence) {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, StreamsAreDecorrelated) {
  Rng a = Rng::stream(7, 0);
  Rng b = Rng::stream(7, 1);
  int equal = 0;
  for (int i = 0; i < 1000; ++i)
    if (a.next_u64() == b.next_u64()) ++equal;
  EXPECT_EQ(equal, 0);
}

TEST(Rng, StreamIsReproducible) {
  Rng a = Rng::stream(123, 55);
  Rng b = Rng::stream(123, 55);
  for (int i = 0; i < 100; ++i) ASSERT_DOUBLE_EQ(a.uniform(), b.uniform());
}

TEST(Rng, UniformInHalfOpenUnitInterval) {
  Rng rng(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, UniformMomentsMatch) {
  Rng rng(2);
  const int n = 200000;
  double mean = 0.0, m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    mean += u;
    m2 += u * u;
  }
  mean /= n;
  m2 /= n;
  EXPECT_NEAR(mean, 0.5, 3.0 / std::sqrt(12.0 * n));
  EXPECT_NEAR(m2 - mean * mean, 1.0 / 12.0, 1e-3);
}

TEST(Rng, GaussianMomentsMatch) {
  Rng rng(3);
  const int n = 200000;
  double mean = 0.0, m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    mean += g;
    m2 += g * g;
  }
  mean /= n;
  m2 /= n;
  EXPECT_NEAR(mean, 0.0, 3.0 / std::sqrt(static_cast<double>(n)));
  EXPECT_NEAR(m2, 1.0, 0.02);
}
