#include <cmath>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <gtest/gtest.h>

#include "lcat/rng.hpp"
#include "lcat/stats.hpp"

using namespace lcat;

namespace {

double boost_two_sided_p(double t, double df) {
  const boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

}  // namespace

TEST(PairedTTest, IdenticalSamplesAreNotSignificant) {
  const std::vector<double> a{0.7, 0.8, 0.75, 0.9};
  const auto r = paired_t_test(a, a);
  EXPECT_EQ(r.p, 1.0);
  EXPECT_FALSE(r.significant);
}

TEST(PairedTTest, WorkedExample) {
  const std::vector<double> a{2, 4, 6, 8, 10}, b{1, 2, 3, 4, 5};
  const auto r = paired_t_test(a, b);
  EXPECT_NEAR(r.t, 3.0 / std::sqrt(2.5 / 5.0), 1e-12);
  EXPECT_NEAR(r.t, 4.2426, 1e-4);
  EXPECT_EQ(r.df, 4.0);
  EXPECT_NEAR(r.p, boost_two_sided_p(r.t, 4.0), 1e-10);
  EXPECT_NEAR(r.p, 0.0132, 1e-4);
  EXPECT_TRUE(r.significant);
}

TEST(PairedTTest, ZeroVarianceNonzeroMeanIsSignificant) {
  const std::vector<double> a{2, 3, 4}, b{1, 2, 3};
  const auto r = paired_t_test(a, b);
  EXPECT_EQ(r.p, 0.0);
  EXPECT_TRUE(r.significant);
}

TEST(PairedTTest, SignFlipsWithArgumentOrder) {
  const std::vector<double> a{0.1, 0.5, 0.2, 0.9}, b{0.3, 0.1, 0.0, 0.4};
  const auto ab = paired_t_test(a, b), ba = paired_t_test(b, a);
  EXPECT_DOUBLE_EQ(ab.t, -ba.t);
  EXPECT_DOUBLE_EQ(ab.p, ba.p);
}

TEST(PairedTTest, RandomSamplesMatchBoost) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform_int(0, 30));
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.normal(0.3, 1.0);
      b[i] = rng.normal();
    }
    const auto r = paired_t_test(a, b);
    EXPECT_NEAR(r.p, boost_two_sided_p(r.t, static_cast<double>(n - 1)), 1e-10) << n;
  }
}

TEST(PairedTTest, NullRejectionRateMatchesAlpha) {
  Rng rng(77);
  int rejected = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> a(10), b(10);
    for (std::size_t i = 0; i < 10; ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal();
    }
    rejected += paired_t_test(a, b).significant;
  }
  EXPECT_NEAR(rejected / 1000.0, 0.05, 0.02);
}

TEST(IncompleteBeta, MatchesBoostOnGrid) {
  for (double a : {0.5, 1.0, 2.5, 10.0})
    for (double b : {0.5, 2.0, 7.0})
      for (double x : {0.0, 0.01, 0.3, 0.5, 0.9, 1.0})
        EXPECT_NEAR(incomplete_beta(x, a, b), boost::math::ibeta(a, b, x), 1e-12) << a << " " << b << " " << x;
}

TEST(StudentT, CdfSymmetricAndMatchesBoost) {
  for (double df : {1.0, 3.0, 29.0})
    for (double t : {-4.0, -1.0, 0.0, 0.5, 2.0}) {
      EXPECT_NEAR(student_t_cdf(t, df), boost::math::cdf(boost::math::students_t(df), t), 1e-12);
      EXPECT_NEAR(student_t_cdf(t, df) + student_t_cdf(-t, df), 1.0, 1e-12);
    }
}
