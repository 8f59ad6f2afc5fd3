#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "pvdt/lambert_w.hpp"

using pvdt::lambert_w0;

namespace {

// Plain Halley iteration in long double, run until it stops moving.
long double halley_oracle(long double x, long double w) {
  for (int k = 0; k < 200; ++k) {
    const long double ew = std::exp(w);
    const long double f = w * ew - x;
    const long double next = w - f / (ew * (w + 1) - (w + 2) * f / (2 * w + 2));
    if (next == w) break;
    w = next;
  }
  return w;
}

}  // namespace

TEST(LambertW, SpecialValues) {
  EXPECT_EQ(lambert_w0(0.0), 0.0);
  EXPECT_NEAR(lambert_w0(pvdt::kEuler), 1.0, 1e-15);
  EXPECT_EQ(lambert_w0(-pvdt::kInvEuler), -1.0);
  EXPECT_EQ(lambert_w0(std::numeric_limits<double>::infinity()),
            std::numeric_limits<double>::infinity());
}

TEST(LambertW, OmegaConstantMatchesHalleyOracle) {
  const double oracle = static_cast<double>(halley_oracle(1.0L, 0.5L));
  EXPECT_NEAR(oracle, 0.5671432904097838, 1e-16);
  EXPECT_NEAR(lambert_w0(1.0), oracle, 2e-16);
}

TEST(LambertW, MatchesOracleAcrossScales) {
  for (double x : {-0.3678, -0.3, -0.1, -1e-8, 1e-300, 1e-8, 0.5, 2.0, 10.0, 1e3, 1e10, 1e100,
                   1e300}) {
    const long double start = x > 1.0 ? std::log(static_cast<long double>(x)) : 0.0L;
    const double oracle = static_cast<double>(halley_oracle(x, start));
    EXPECT_NEAR(lambert_w0(x), oracle, 4e-15 * std::max(1.0, std::fabs(oracle))) << "x=" << x;
  }
}

TEST(LambertW, RejectsOutsideDomain) {
  EXPECT_THROW(lambert_w0(-0.4), pvdt::DomainError);
  EXPECT_THROW(lambert_w0(std::nan("")), pvdt::DomainError);
  EXPECT_THROW(lambert_w0(-std::numeric_limits<double>::infinity()), pvdt::DomainError);
}

TEST(LambertW, ResidualOnRandomDraws) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> expo(-300.0, 30.0);
  std::uniform_real_distribution<double> neg(-pvdt::kInvEuler, 0.0);
  for (int k = 0; k < 100000; ++k) {
    const double x = k % 5 == 0 ? neg(rng) : std::pow(10.0, expo(rng));
    const double w = lambert_w0(x);
    ASSERT_LE(std::fabs(w * std::exp(w) - x), 1e-12 * std::max(1.0, std::fabs(x))) << x;
  }
}

TEST(LambertW, MonotoneNondecreasing) {
  std::vector<double> xs;
  for (double x = -pvdt::kInvEuler; x < 50.0; x += 0.013) xs.push_back(x);
  double prev = lambert_w0(xs.front());
  for (double x : xs) {
    const double w = lambert_w0(x);
    ASSERT_GE(w, prev) << x;
    prev = w;
  }
}
