#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "pvdt/sd_model.hpp"

using namespace pvdt;

namespace {

const PlantConstants kPlant{};

// KCL residual in long double, solved by plain bisection.
double bisect_current(const PvParams& p, const DerivedQuantities& d, double v) {
  auto f = [&](long double i) {
    const long double vd = v + i * p.rs;
    return d.i_ph - d.i_s * std::expm1(vd / d.a) - vd / p.rsh - i;
  };
  long double lo = -v / p.rs, hi = d.i_ph + 1.0L;
  for (int k = 0; k < 300; ++k) {
    const long double mid = 0.5L * (lo + hi);
    (f(mid) > 0 ? lo : hi) = mid;
  }
  return static_cast<double>(0.5L * (lo + hi));
}

double scan_max_power(const PvParams& p, const EnvInputs& env, int n) {
  const auto d = derive_quantities(p, kPlant, env);
  // Open circuit lies below a (ln(i_ph/i_s + 1)); scan a little past it.
  const double v_hi = d.a * std::log(d.i_ph / d.i_s + 1.0) * 1.02;
  double best = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double v = v_hi * k / n;
    best = std::max(best, v * bisect_current(p, d, v));
  }
  return best;
}

}  // namespace

TEST(DeriveQuantities, PhotocurrentScaling) {
  EXPECT_EQ(derive_quantities(kDatasheetParams, kPlant, {0.0, 40.0}).i_ph, 0.0);
  EXPECT_DOUBLE_EQ(derive_quantities(kDatasheetParams, kPlant, {1000.0, 25.0}).i_ph, 11.134);
  PlantConstants raw;
  raw.g_ref = 1.0;
  EXPECT_DOUBLE_EQ(derive_quantities(kDatasheetParams, raw, {1000.0, 25.0}).i_ph, 11134.0);
}

TEST(DeriveQuantities, ReferenceTemperature) {
  const auto d = derive_quantities(kDatasheetParams, kPlant, {800.0, 25.0});
  EXPECT_DOUBLE_EQ(d.i_s, kDatasheetParams.is0);
  const double vt = 1.380649e-23 * 298.15 / 1.602176634e-19;
  EXPECT_NEAR(d.a, 1.086 * vt * 72, 1e-12);
  EXPECT_NEAR(d.omega * std::exp(d.omega), d.i_ph * std::exp(1.0) / d.i_s, 1e-9 * d.i_ph / d.i_s);
}

TEST(DeriveQuantities, TemperatureCorrections) {
  const auto d = derive_quantities(kDatasheetParams, kPlant, {1000.0, 50.0});
  const double tk = 323.15, r = tk / 298.15;
  EXPECT_NEAR(d.i_ph, 11.134 * (1 + 25 * 0.0005), 1e-12);
  EXPECT_NEAR(d.i_s, 3.405e-10 * r * r * r * std::exp(47.1 * (1 - 298.15 / tk)), 1e-20);
}

TEST(DeriveQuantities, RejectsInvalidInputs) {
  EXPECT_THROW(derive_quantities({0.3, 0.2, 1, 10, 1e-10}, kPlant, {500, 25}), DomainError);
  EXPECT_THROW(derive_quantities(kDatasheetParams, kPlant, {-1.0, 25}), DomainError);
  EXPECT_THROW(derive_quantities(kDatasheetParams, kPlant, {500, 120}), DomainError);
}

TEST(MppPoint, DarkIsZeroPower) {
  const auto op = mpp_point(kDatasheetParams, kPlant, {0.0, 25.0});
  EXPECT_EQ(op.p, 0.0);
  EXPECT_EQ(mpp_point(kDatasheetParams, kPlant, {0.5, 25.0}).p, 0.0);
  EXPECT_FALSE(try_mpp_point(kDatasheetParams, kPlant, {0.0, 25.0}));
}

TEST(MppPoint, DegenerateWhenSaturationCurrentDominates) {
  const PvParams p{0.2, 300, 1.0, 0.01, 1.0};
  EXPECT_THROW(mpp_point(p, kPlant, {5.0, 25.0}), DegenerateError);
}

TEST(MppPoint, PowerIsExactProduct) {
  for (double g : {120.0, 450.0, 999.0}) {
    const auto op = mpp_point(kDatasheetParams, kPlant, {g, 31.0});
    EXPECT_EQ(op.p, op.v * op.i);
  }
}

TEST(MppPoint, DatasheetSetAgainstDenseScan) {
  const auto op = mpp_point(kDatasheetParams, kPlant, {1000.0, 25.0});
  const double scan = scan_max_power(kDatasheetParams, {1000.0, 25.0}, 10000);
  EXPECT_NEAR(op.p, scan, 0.005 * scan);
  EXPECT_GT(op.v, 30.0);
  EXPECT_LT(op.v, 50.0);
}

TEST(MppPoint, IncreasesWithIrradiance) {
  double prev = 0.0;
  for (double g = 50.0; g <= 1000.0; g += 10.0) {
    const double p = mpp_point(kDatasheetParams, kPlant, {g, 25.0}).p;
    ASSERT_GT(p, prev) << g;
    prev = p;
  }
}

TEST(MppPoint, ExactOmegaBarelyDiffers) {
  PlantConstants exact;
  exact.exact_omega = true;
  const auto a = mpp_point(kDatasheetParams, kPlant, {700.0, 30.0});
  const auto b = mpp_point(kDatasheetParams, exact, {700.0, 30.0});
  EXPECT_NEAR(a.p, b.p, 1e-6 * a.p);
}

TEST(CurrentAtVoltage, ShortCircuitMatchesBisection) {
  const EnvInputs env{800.0, 40.0};
  const auto d = derive_quantities(kDatasheetParams, kPlant, env);
  const double i0 = current_at_voltage(kDatasheetParams, kPlant, env, 0.0);
  EXPECT_NEAR(i0, bisect_current(kDatasheetParams, d, 0.0), 1e-8);
  EXPECT_NEAR(i0, d.i_ph * kDatasheetParams.rsh / (kDatasheetParams.rsh + kDatasheetParams.rs),
              1e-6);
}

TEST(CurrentAtVoltage, AgreesWithBisectionAlongCurve) {
  const EnvInputs env{600.0, 20.0};
  const auto d = derive_quantities(kDatasheetParams, kPlant, env);
  for (double v = 0.0; v < 48.0; v += 1.7) {
    EXPECT_NEAR(current_at_voltage(kDatasheetParams, kPlant, env, v),
                bisect_current(kDatasheetParams, d, v), 1e-8) << v;
  }
}

TEST(CurrentAtVoltage, ConsistentWithClosedFormMpp) {
  const EnvInputs env{900.0, 35.0};
  const auto op = mpp_point(kDatasheetParams, kPlant, env);
  EXPECT_NEAR(current_at_voltage(kDatasheetParams, kPlant, env, op.v), op.i, 0.01 * op.i);
}

TEST(CurrentAtVoltage, DarkShorted) {
  EXPECT_EQ(current_at_voltage(kDatasheetParams, kPlant, {0.0, 25.0}, 0.0), 0.0);
}

TEST(CurrentAtVoltage, Errors) {
  EXPECT_THROW(current_at_voltage(kDatasheetParams, kPlant, {500, 25}, -1.0), DomainError);
  EXPECT_THROW(current_at_voltage(kDatasheetParams, kPlant, {500, 25}, 30.0, 0), ConvergenceError);
}

TEST(KclResidual, ZeroOnCurve) {
  for (double g : {100.0, 500.0, 1000.0}) {
    const EnvInputs env{g, 28.0};
    const auto d = derive_quantities(kDatasheetParams, kPlant, env);
    // Below ~20 V the diode current is tiny and the log argument of f1 loses
    // most of its digits, so only the knee and above are checked.
    for (double v = 20.0; v < 45.0; v += 2.5) {
      const double i = current_at_voltage(kDatasheetParams, kPlant, env, v);
      if (i <= 0.0) continue;
      EXPECT_LE(std::fabs(kcl_residual(kDatasheetParams, kPlant, env, v, i)), 1e-6 * d.a);
    }
  }
}

TEST(KclResidual, InfeasibleAbovePhotocurrent) {
  const EnvInputs env{500.0, 25.0};
  const double i_ph = derive_quantities(kDatasheetParams, kPlant, env).i_ph;
  EXPECT_THROW(kcl_residual(kDatasheetParams, kPlant, env, 10.0, i_ph + 0.1), InfeasibleError);
  EXPECT_FALSE(try_kcl_residual(kDatasheetParams, kPlant, env, 10.0, i_ph + 0.1));
}

TEST(KclResidual, SignChangeBracketsGeneratingIrradiance) {
  const auto op = mpp_point(kDatasheetParams, kPlant, {500.0, 25.0});
  EXPECT_GT(std::fabs(kcl_residual(kDatasheetParams, kPlant, {600.0, 25.0}, op.v, op.i)), 0.0);
  // Scan g for the sign change of f1.
  double prev_g = 0.0, prev_f = 0.0, root = -1.0;
  for (double g = 300.0; g <= 700.0; g += 1.0) {
    const auto f = try_kcl_residual(kDatasheetParams, kPlant, {g, 25.0}, op.v, op.i);
    if (!f) continue;
    if (prev_g > 0.0 && prev_f < 0.0 && *f >= 0.0) root = g;
    prev_g = g;
    prev_f = *f;
  }
  EXPECT_NEAR(root, 500.0, 1.0);
}
