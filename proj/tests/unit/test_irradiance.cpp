#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pvdt/irradiance.hpp"
#include "pvdt/two_stage.hpp"

using namespace pvdt;

namespace {

const PlantConstants kPlant{};

Measurement at_mpp(const PvParams& p, double g, double t) {
  const auto op = mpp_point(p, kPlant, {g, t});
  return make_measurement(0.0, op.v, op.i, t);
}

// Golden-section search on |f1| over a bracket known to hold the root.
double golden_oracle(const Measurement& m, const PvParams& p, double lo, double hi) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  auto f = [&](double g) { return stage1_objective(g, m, p, kPlant); };
  double a = lo, b = hi;
  for (int k = 0; k < 200; ++k) {
    const double c = b - r * (b - a), d = a + r * (b - a);
    (f(c) < f(d) ? b : a) = f(c) < f(d) ? d : c;
  }
  return 0.5 * (a + b);
}

IrradianceEstimate estimate(const Measurement& m, const PvParams& p, std::uint64_t seed = 1) {
  return estimate_equivalent_irradiance(m, p, kPlant, {0.0, 1000.0}, default_stage1_config(),
                                        seed);
}

}  // namespace

TEST(EquivalentIrradiance, RoundTripAt500) {
  const auto m = at_mpp(kDatasheetParams, 500.0, 25.0);
  const auto est = estimate(m, kDatasheetParams);
  EXPECT_EQ(est.status, EstimateStatus::converged);
  EXPECT_NEAR(est.g_equiv, 500.0, 1.0);
  EXPECT_NEAR(golden_oracle(m, kDatasheetParams, 400.0, 600.0), 500.0, 1e-3);
}

TEST(EquivalentIrradiance, DarkIsDegenerate) {
  const auto est = estimate(make_measurement(0, 0, 0, 20), kDatasheetParams);
  EXPECT_EQ(est.status, EstimateStatus::degenerate);
  EXPECT_EQ(est.g_equiv, 0.0);
}

TEST(EquivalentIrradiance, MoreCurrentMeansMoreIrradiance) {
  const auto m = at_mpp(kDatasheetParams, 600.0, 30.0);
  auto bright = m;
  bright.i_meas *= 1.1;
  bright.p_meas = bright.v_meas * bright.i_meas;
  const double g0 = estimate(m, kDatasheetParams).g_equiv;
  const double g1 = estimate(bright, kDatasheetParams).g_equiv;
  EXPECT_GT(g1, g0);
  // Dense scan agrees on the direction.
  auto scan = [&](const Measurement& s) {
    double best = 0.0, f_best = INFINITY;
    for (double g = 0.0; g <= 1000.0; g += 0.05) {
      const double f = stage1_objective(g, s, kDatasheetParams, kPlant);
      if (f < f_best) f_best = f, best = g;
    }
    return best;
  };
  EXPECT_GT(scan(bright), scan(m));
}

TEST(EquivalentIrradiance, RandomRoundTrips) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ug(100.0, 1000.0), ut(0.0, 45.0), ud(-0.3, 0.3);
  for (int k = 0; k < 60; ++k) {
    PvParams p = kDatasheetParams;
    p.rs *= 1 + ud(rng);
    p.rsh *= 1 + ud(rng);
    p.kd *= 1 + ud(rng) / 3;
    const double g = ug(rng);
    const auto m = at_mpp(p, g, ut(rng));
    const auto est = estimate(m, p, k);
    EXPECT_NEAR(est.g_equiv, g, 0.005 * g) << k;
  }
}

TEST(EquivalentIrradiance, ClosedFormRootMatchesSwarm) {
  for (double g : {150.0, 480.0, 930.0}) {
    const auto m = at_mpp(kDatasheetParams, g, 18.0);
    EXPECT_NEAR(equivalent_irradiance_exact(m, kDatasheetParams, kPlant, {0, 1000}), g, 1e-6 * g);
    EXPECT_NEAR(estimate(m, kDatasheetParams).g_equiv, g, 0.005 * g);
  }
  const auto m = at_mpp(kDatasheetParams, 900.0, 25.0);
  EXPECT_EQ(equivalent_irradiance_exact(m, kDatasheetParams, kPlant, {0, 500}), 500.0);
}

TEST(EquivalentIrradiance, PenaltyGradesTheDeficit) {
  const auto m = at_mpp(kDatasheetParams, 800.0, 25.0);
  const double far = stage1_objective(10.0, m, kDatasheetParams, kPlant);
  const double near = stage1_objective(500.0, m, kDatasheetParams, kPlant);
  EXPECT_GE(near, kInfeasiblePenalty);
  EXPECT_GT(far, near);
  EXPECT_LT(stage1_objective(800.0, m, kDatasheetParams, kPlant), 1e-6);
}

TEST(EquivalentIrradiance, InfeasibleWhenCurrentExceedsUpperBound) {
  const auto m = at_mpp(kDatasheetParams, 900.0, 25.0);
  const auto est = estimate_equivalent_irradiance(m, kDatasheetParams, kPlant, {0.0, 300.0},
                                                  default_stage1_config(), 3);
  EXPECT_EQ(est.status, EstimateStatus::infeasible);
  EXPECT_NEAR(est.g_equiv, 300.0, 1.0);
}

TEST(EquivalentIrradiance, Deterministic) {
  const auto m = at_mpp(kDatasheetParams, 321.0, 12.0);
  EXPECT_EQ(estimate(m, kDatasheetParams, 9).g_equiv, estimate(m, kDatasheetParams, 9).g_equiv);
}
