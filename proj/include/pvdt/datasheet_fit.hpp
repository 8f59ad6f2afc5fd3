#pragma once

// Offline fit of the initial parameter set to manufacturer I-V curve points
// by RMSE minimization over the current channel.

#include <algorithm>
#include <cmath>
#include <span>
#include <tuple>
#include <vector>

#include "pvdt/errors.hpp"
#include "pvdt/irradiance.hpp"
#include "pvdt/pso.hpp"
#include "pvdt/sd_model.hpp"
#include "pvdt/two_stage.hpp"

namespace pvdt {

struct CurvePoint {
  double v = 0.0;    ///< [V]
  double i = 0.0;    ///< [A]
  double g = 1000.0; ///< irradiance of the curve [W/m^2]
  double t_c = 25.0; ///< temperature of the curve [degC]

  bool operator==(const CurvePoint&) const = default;
};

struct DatasheetFit {
  PvParams params;
  double rmse = 0.0;  ///< [A]
};

/// Identical points merged into one entry with a multiplicity weight, so the
/// objective is exactly invariant under duplicating the point set.
class CurveObjective {
 public:
  CurveObjective(std::vector<CurvePoint> points, const PlantConstants& plant) : plant_(plant) {
    std::sort(points.begin(), points.end(), [](const CurvePoint& a, const CurvePoint& b) {
      return std::tie(a.g, a.t_c, a.v, a.i) < std::tie(b.g, b.t_c, b.v, b.i);
    });
    for (const auto& p : points) {
      if (!entries_.empty() && entries_.back().point == p) {
        entries_.back().weight += 1.0;
      } else {
        entries_.push_back({p, 1.0});
      }
    }
  }

  /// RMSE of the model current against the points [A]; kInfeasiblePenalty
  /// when the parameters are invalid or a current solve fails.
  double rmse(const PvParams& params) const noexcept {
    if (!params.valid()) return kInfeasiblePenalty;
    double sum_sq = 0.0;
    double sum_w = 0.0;
    const EnvInputs* last_env = nullptr;
    EnvInputs env;
    std::optional<DerivedQuantities> d;
    for (const auto& e : entries_) {
      if (!last_env || env.g != e.point.g || env.t_c != e.point.t_c) {
        env = EnvInputs{e.point.g, e.point.t_c};
        last_env = &env;
        d = detail::derive_unchecked(params, plant_, env);
        if (!d) return kInfeasiblePenalty;
      }
      const auto s = detail::solve_current(params, *d, e.point.v, 100);
      if (s.status != detail::SolveStatus::ok) return kInfeasiblePenalty;
      const double err = s.i - e.point.i;
      sum_sq += e.weight * err * err;
      sum_w += e.weight;
    }
    return std::sqrt(sum_sq / sum_w);
  }

  std::size_t unique_points() const noexcept { return entries_.size(); }

 private:
  struct Entry {
    CurvePoint point;
    double weight;
  };
  PlantConstants plant_;
  std::vector<Entry> entries_;
};

/// The narrow five-dimensional valley needs an exploring swarm, so the
/// default uses constriction coefficients rather than the online-fit ones.
inline PsoConfig default_datasheet_config() {
  PsoConfig cfg;
  cfg.n_particles = 60;
  cfg.n_iterations = 1500;
  cfg.c1 = 1.49445;
  cfg.c2 = 1.49445;
  cfg.w = 0.729;
  cfg.seed = 2022;
  return cfg;
}

inline DatasheetFit fit_datasheet(const std::vector<CurvePoint>& points,
                                  const PlantConstants& plant, const ParamBounds& bounds,
                                  const PsoConfig& cfg = default_datasheet_config()) {
  if (points.size() < PvParams::size) {
    throw InsufficientData("fit_datasheet: need at least 5 curve points, got " +
                           std::to_string(points.size()));
  }
  for (const auto& p : points) {
    if (!(p.v >= 0.0) || !(p.i >= 0.0)) {
      throw DomainError("fit_datasheet: curve points need v >= 0 and i >= 0");
    }
    detail::check_env(plant, EnvInputs{p.g, p.t_c});
  }
  bounds.validate();
  plant.validate();

  const CurveObjective objective(points, plant);
  const ParamSearchSpace space(bounds, {0, 1, 2, 3, 4}, bounds.lower);
  const auto r = minimize(
      [&](std::span<const double> x) { return objective.rmse(space.decode(x)); }, space.box(),
      cfg);
  DatasheetFit fit{space.decode(r.x_best), r.f_best};
  return fit;
}

}  // namespace pvdt
