#include "pmeas/hiddenvar.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "pmeas/rng.hpp"
#include "test_util.hpp"

using namespace pmeas;

TEST(SampleH, AllOutputsAreUnit) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) EXPECT_NEAR(length(sample_h(rng)), 1.0, 1e-12);
}

TEST(SampleH, MeanVectorVanishes) {
  Rng rng(2);
  const int n = 100000;
  Vec3 mean = {0, 0, 0};
  for (int i = 0; i < n; ++i) {
    const Vec3 h = sample_h(rng);
    mean[0] += h[0];
    mean[1] += h[1];
    mean[2] += h[2];
  }
  for (double& c : mean) c /= n;
  EXPECT_LT(length(mean), 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST(SampleH, CoordinatesAreUniform) {
  // For a uniform sphere direction each coordinate is uniform on [-1, 1];
  // Kolmogorov-Smirnov against that CDF at the 1% level.
  Rng rng(3);
  const int n = 100000;
  std::array<std::vector<double>, 3> coords;
  for (auto& c : coords) c.reserve(n);
  for (int i = 0; i < n; ++i) {
    const Vec3 h = sample_h(rng);
    for (int k = 0; k < 3; ++k) coords[k].push_back(h[k]);
  }
  for (auto& c : coords) {
    std::sort(c.begin(), c.end());
    double d = 0.0;
    for (int i = 0; i < n; ++i) {
      const double cdf = (c[i] + 1.0) / 2.0;
      d = std::max(d, std::abs((i + 1.0) / n - cdf));
      d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
    }
    EXPECT_LT(d, 1.628 / std::sqrt(static_cast<double>(n)));
  }
}

TEST(HvOutcome, AlignedPreparationIsDeterministic) {
  Rng rng(4);
  const Observable3 sigma_z{0.0, {0, 0, 1}};
  for (int i = 0; i < 200; ++i) {
    EXPECT_EQ(hv_outcome({{0, 0, 1}, sample_h(rng)}, sigma_z), 1.0);
    EXPECT_EQ(hv_outcome({{0, 0, -1}, sample_h(rng)}, sigma_z), -1.0);
  }
}

TEST(HvOutcome, TransversePreparationFollowsHiddenSign) {
  Rng rng(5);
  const Observable3 sigma_z{0.0, {0, 0, 1}};
  for (int i = 0; i < 200; ++i) {
    const Vec3 h = sample_h(rng);
    const double v = hv_outcome({{1, 0, 0}, h}, sigma_z);
    EXPECT_EQ(v, h[2] >= 0.0 ? 1.0 : -1.0);
  }
}

TEST(HvOutcome, RejectsDegenerateInputs) {
  EXPECT_THROW(hv_outcome({{0, 0, 1}, {0, 0, 1}}, Observable3{1.0, {0, 0, 0}}),
               std::invalid_argument);
  EXPECT_THROW(hv_outcome({{0, 0, 2}, {0, 0, 1}}, Observable3{0.0, {0, 0, 1}}),
               std::invalid_argument);
}

TEST(HvAverage, AlignedSigmaZIsExactlyOne) {
  Rng rng(7);
  EXPECT_EQ(hv_average({0, 0, 1}, {0.0, {0, 0, 1}}, 5000, rng), 1.0);
}

TEST(HvAverage, TransverseSigmaZVanishes) {
  Rng rng(8);
  const HVAverage avg = hv_average_detail({1, 0, 0}, {0.0, {0, 0, 1}}, 100000, rng);
  EXPECT_NEAR(avg.mean, 0.0, 3.0 * avg.std_error);
}

TEST(HvAverage, ShiftedObservableAtSixtyDegrees) {
  // A = 2 + 3 x.sigma on a preparation 60 degrees from x: <A> = 2 + 3/2.
  Rng rng(9);
  const Vec3 n = {0.5, std::sqrt(3.0) / 2.0, 0.0};
  const HVAverage avg = hv_average_detail(n, {2.0, {3, 0, 0}}, 100000, rng);
  EXPECT_NEAR(avg.mean, 3.5, 3.0 * avg.std_error);
}

TEST(HvAverage, MatchesQuantumFormOnRandomObservables) {
  Rng rng(16);
  for (int i = 0; i < 20; ++i) {
    const Vec3 n = sample_h(rng);
    const Observable3 a{(rng.uniform() - 0.5) * 4.0,
                        {rng.gaussian(), rng.gaussian(), rng.gaussian()}};
    if (length(a.a1) < 0.1) continue;
    const HVAverage avg = hv_average_detail(n, a, 100000, rng);
    const double want = a.a0 + dot(a.a1, n);
    ASSERT_NEAR(avg.mean, want, 3.0 * avg.std_error + 1e-12);
  }
}

TEST(HvAverage, OutcomesTakeOnlyTwoValues) {
  Rng rng(11);
  const Observable3 a{0.7, {0.3, 0.1, 0.4}};
  const double mag = length(a.a1);
  for (int i = 0; i < 500; ++i) {
    const double v = hv_outcome({sample_h(rng), sample_h(rng)}, a);
    const bool is_plus = std::abs(v - (a.a0 + mag)) < 1e-15;
    const bool is_minus = std::abs(v - (a.a0 - mag)) < 1e-15;
    EXPECT_TRUE(is_plus || is_minus);
  }
}

TEST(Selection, HvArmAlwaysReadsPlus) {
  Rng rng(12);
  for (double p : {0.5, 0.9, 1.0}) {
    const SelectionReport rep = selection_experiment(p, 20000, rng);
    EXPECT_EQ(rep.hv_sigma_x_plus_frequency, 1.0);
    EXPECT_NEAR(rep.hv_selected_fraction, 0.5,
                3.0 * testutil::binomial_sigma(0.5, rep.trials));
  }
}

TEST(Selection, QuantumArmClosedForm) {
  Rng rng(13);
  const SelectionReport full = selection_experiment(1.0, 1000, rng);
  EXPECT_NEAR(full.qm_sigma_x_plus_probability, 0.5, 1e-12);
  EXPECT_NEAR(full.qm_survival_probability, 0.5, 1e-12);

  const SelectionReport strong = selection_experiment(0.96, 1000, rng);
  EXPECT_NEAR(strong.qm_sigma_x_plus_probability, 1.44 / 2.08, 1e-12);
  EXPECT_NEAR(strong.qm_survival_probability, 1.0 - 0.48, 1e-12);
}

TEST(Selection, ClosedFormMatchesFormulaOnGrid) {
  Rng rng(14);
  for (double p : {0.2, 0.5, 0.8, 0.96, 1.0}) {
    const SelectionReport rep = selection_experiment(p, 100, rng);
    const double want = (1.0 + std::sqrt(1.0 - p)) * (1.0 + std::sqrt(1.0 - p)) /
                        (2.0 * (2.0 - p));
    ASSERT_NEAR(rep.qm_sigma_x_plus_probability, want, 1e-12);
    ASSERT_NEAR(rep.qm_survival_probability, 1.0 - p / 2.0, 1e-12);
  }
}

TEST(Selection, DivergenceSeparatesModels) {
  Rng rng(15);
  for (double p : {0.96, 0.98, 1.0}) {
    const SelectionReport rep = selection_experiment(p, 50000, rng);
    EXPECT_GE(rep.divergence, 0.3);
  }
}
