#pragma once

// Equivalent irradiance: the irradiance at which a measured (V, I, T) sample
// lies on the model I-V curve, found by minimizing |f1(g)| with the swarm.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>

#include "pvdt/measurement.hpp"
#include "pvdt/pso.hpp"
#include "pvdt/sd_model.hpp"

namespace pvdt {

/// Objective value assigned to irradiances where the KCL log argument is <= 0.
inline constexpr double kInfeasiblePenalty = 1e12;

enum class EstimateStatus { converged, degenerate, infeasible };

inline std::string_view to_string(EstimateStatus s) {
  switch (s) {
    case EstimateStatus::converged: return "converged";
    case EstimateStatus::degenerate: return "degenerate";
    case EstimateStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

struct IrradianceEstimate {
  double g_equiv = 0.0;
  double residual = 0.0;  ///< |f1| at g_equiv [V]
  EstimateStatus status = EstimateStatus::converged;
};

/// |f1(g)|. Where the log argument is not positive the value is the penalty
/// scaled up by the relative photocurrent deficit, so a swarm that starts
/// entirely in the infeasible region still drifts toward feasibility.
inline double stage1_objective(double g, const Measurement& meas, const PvParams& params,
                               const PlantConstants& plant) noexcept {
  const auto f = try_kcl_residual(params, plant, EnvInputs{g, meas.t_meas}, meas.v_meas,
                                  meas.i_meas);
  if (f) return std::fabs(*f);
  const double need = meas.i_meas + (meas.v_meas + meas.i_meas * params.rs) / params.rsh;
  const double i_ph = g / plant.g_ref * params.iph0 * (1.0 + (meas.t_meas - 25.0) * plant.alpha_isc);
  const double deficit = need > 0.0 ? std::clamp((need - i_ph) / need, 0.0, 1.0) : 0.0;
  return kInfeasiblePenalty * (1.0 + (std::isfinite(deficit) ? deficit : 1.0));
}

/// Minimizer of |f1| over `bounds` in closed form. i_ph is linear in g and f1
/// increases with g, so the root is
///   i_ph = i + (v + i rs)/rsh + i_s (exp((v + i rs)/a) - 1)
/// clamped to the interval.
inline double equivalent_irradiance_exact(const Measurement& meas, const PvParams& params,
                                          const PlantConstants& plant,
                                          const Interval& bounds) noexcept {
  const double t_k = meas.t_meas + plant.t_fp;
  const double t_ratio = t_k / plant.t_stc;
  const double a = params.kd * (plant.k_boltzmann * plant.t_stc / plant.q_electron) * plant.ns * t_ratio;
  const double i_s = params.is0 * t_ratio * t_ratio * t_ratio *
                     std::exp(plant.exp_coeff * (1.0 - plant.t_stc / t_k));
  const double vd = meas.v_meas + meas.i_meas * params.rs;
  const double i_ph = meas.i_meas + vd / params.rsh + i_s * std::expm1(vd / a);
  const double per_g = params.iph0 * (1.0 + (meas.t_meas - 25.0) * plant.alpha_isc) / plant.g_ref;
  if (!(per_g > 0.0)) return bounds.lo;
  const double g = i_ph / per_g;
  if (std::isnan(g)) return bounds.hi;
  return std::clamp(g, bounds.lo, bounds.hi);
}

inline PsoConfig default_stage1_config() {
  PsoConfig cfg;
  cfg.n_particles = 20;
  cfg.n_iterations = 50;
  return cfg;
}

inline IrradianceEstimate estimate_equivalent_irradiance(const Measurement& meas,
                                                         const PvParams& params,
                                                         const PlantConstants& plant,
                                                         const Interval& bounds,
                                                         const PsoConfig& pso_cfg,
                                                         std::uint64_t seed,
                                                         const DarkThresholds& dark = {}) {
  if (is_dark(meas, dark)) return {bounds.lo, 0.0, EstimateStatus::degenerate};

  PsoConfig cfg = pso_cfg;
  cfg.seed = seed;
  const Bounds box{{bounds.lo}, {bounds.hi}};
  const auto r = minimize(
      [&](std::span<const double> x) { return stage1_objective(x[0], meas, params, plant); }, box,
      cfg);
  IrradianceEstimate est{r.x_best[0], r.f_best, EstimateStatus::converged};
  if (r.f_best >= kInfeasiblePenalty) est.status = EstimateStatus::infeasible;
  return est;
}

}  // namespace pvdt
