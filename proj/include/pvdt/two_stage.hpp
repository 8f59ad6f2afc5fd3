#pragma once

// Two-stage co-optimization of equivalent irradiance and model parameters
// against one measured sample.
//
// Stage 1 estimates g from the KCL residual with the incumbent parameters.
// Stage 2 searches the parameters that reproduce the measured (V, I) as the
// closed-form maximum power point at that g. The stages alternate against the
// incumbent best parameters. Stage 2 is tiered: the loop first moves only rs
// and rsh, and reruns with all five free only when the best tier-1 fit still
// leaves a relative error above the tier threshold.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pvdt/errors.hpp"
#include "pvdt/irradiance.hpp"
#include "pvdt/measurement.hpp"
#include "pvdt/pso.hpp"
#include "pvdt/sd_model.hpp"

namespace pvdt {

/// Per-parameter search box for the five model parameters.
struct ParamBounds {
  PvParams lower;
  PvParams upper;

  void validate() const {
    const auto lo = lower.to_array();
    const auto hi = upper.to_array();
    for (std::size_t k = 0; k < PvParams::size; ++k) {
      if (!(lo[k] > 0.0) || !(lo[k] < hi[k]) || !std::isfinite(hi[k])) {
        throw ConfigError("ParamBounds: need 0 < lower < upper for " +
                          std::string(PvParams::names[k]));
      }
    }
  }

  bool contains(const PvParams& p) const noexcept {
    const auto x = p.to_array();
    const auto lo = lower.to_array();
    const auto hi = upper.to_array();
    for (std::size_t k = 0; k < PvParams::size; ++k) {
      if (!(x[k] >= lo[k] && x[k] <= hi[k])) return false;
    }
    return true;
  }

  PvParams clamp(const PvParams& p) const noexcept {
    auto x = p.to_array();
    const auto lo = lower.to_array();
    const auto hi = upper.to_array();
    for (std::size_t k = 0; k < PvParams::size; ++k) x[k] = std::clamp(x[k], lo[k], hi[k]);
    return PvParams::from_array(x);
  }
};

inline ParamBounds default_param_bounds() {
  return ParamBounds{PvParams{0.001, 10.0, 0.5, 0.1, 1e-12}, PvParams{10.0, 5000.0, 2.0, 20.0, 1e-6}};
}

/// Maps a subset of the five parameters to a PSO search box. The saturation
/// current spans several decades and is searched in log10.
class ParamSearchSpace {
 public:
  static constexpr std::size_t kLogIndex = 4;

  ParamSearchSpace(const ParamBounds& bounds, std::vector<std::size_t> free, const PvParams& base)
      : free_(std::move(free)), base_(base.to_array()) {
    const auto lo = bounds.lower.to_array();
    const auto hi = bounds.upper.to_array();
    for (auto k : free_) {
      box_.lower.push_back(k == kLogIndex ? std::log10(lo[k]) : lo[k]);
      box_.upper.push_back(k == kLogIndex ? std::log10(hi[k]) : hi[k]);
    }
  }

  const Bounds& box() const noexcept { return box_; }
  const std::vector<std::size_t>& free() const noexcept { return free_; }

  PvParams decode(std::span<const double> x) const noexcept {
    auto p = base_;
    for (std::size_t j = 0; j < free_.size(); ++j) {
      const auto k = free_[j];
      p[k] = k == kLogIndex ? std::pow(10.0, x[j]) : x[j];
    }
    return PvParams::from_array(p);
  }

  std::vector<double> encode(const PvParams& params) const {
    const auto p = params.to_array();
    std::vector<double> x;
    x.reserve(free_.size());
    for (auto k : free_) x.push_back(k == kLogIndex ? std::log10(p[k]) : p[k]);
    box_.clamp(x);
    return x;
  }

 private:
  std::vector<std::size_t> free_;
  std::array<double, PvParams::size> base_;
  Bounds box_;
};

inline PsoConfig default_stage2_config() {
  PsoConfig cfg;
  cfg.n_particles = 30;
  cfg.n_iterations = 100;
  return cfg;
}

struct CoOptConfig {
  Interval x1_bounds{0.0, 1000.0};
  ParamBounds x2_bounds = default_param_bounds();
  std::size_t outer_iterations = 5;
  PsoConfig stage1_cfg = default_stage1_config();
  PsoConfig stage2_cfg = default_stage2_config();
  double tier_threshold = 0.005;
  double convergence_tol = 1e-4;
  /// Solve stage 1 for every stage-2 particle instead of alternating the
  /// stages. The inner solve uses the closed-form root of f1.
  bool nested = false;
  /// Divide the current and voltage errors by the measured magnitudes.
  bool normalized_f2 = false;
  DarkThresholds dark;

  void validate() const {
    if (!(x1_bounds.lo >= 0.0 && x1_bounds.lo < x1_bounds.hi && x1_bounds.hi <= 1500.0)) {
      throw ConfigError("CoOptConfig: x1 bounds must satisfy 0 <= lo < hi <= 1500");
    }
    x2_bounds.validate();
    stage1_cfg.validate();
    stage2_cfg.validate();
    if (outer_iterations < 1) throw ConfigError("CoOptConfig: outer_iterations must be >= 1");
    if (!(tier_threshold > 0.0)) throw ConfigError("CoOptConfig: tier_threshold must be positive");
  }
};

struct RelativeErrors {
  double i = 0.0;
  double v = 0.0;
  double max() const noexcept { return std::max(i, v); }
};

/// |i_meas - i| / i_meas and |v_meas - v| / v_meas with the denominators
/// floored at the dark thresholds.
inline RelativeErrors relative_errors(const Measurement& meas, const OperatingPoint& pred,
                                      const DarkThresholds& dark = {}) noexcept {
  return {std::fabs(meas.i_meas - pred.i) / std::max(meas.i_meas, dark.i),
          std::fabs(meas.v_meas - pred.v) / std::max(meas.v_meas, dark.v)};
}

/// |i_meas - I(g)| + |v_meas - V(g)| at the closed-form maximum power point.
/// Returns kInfeasiblePenalty when the model has no maximum power point.
inline double stage2_objective(const PvParams& x2, double g_equiv, const PlantConstants& plant,
                               const Measurement& meas, bool normalized = false,
                               const DarkThresholds& dark = {}) noexcept {
  const auto op = try_mpp_point(x2, plant, EnvInputs{g_equiv, meas.t_meas});
  if (!op) return kInfeasiblePenalty;
  const double di = std::fabs(meas.i_meas - op->i);
  const double dv = std::fabs(meas.v_meas - op->v);
  if (!normalized) return di + dv;
  return di / std::max(meas.i_meas, dark.i) + dv / std::max(meas.v_meas, dark.v);
}

enum class CoOptStatus { converged, max_iterations };

struct CoOptResult {
  double g_equiv = 0.0;
  PvParams params;
  double f2_value = 0.0;
  int tier_used = 1;
  std::size_t outer_iters_run = 0;  ///< summed over both tiers
  OperatingPoint predicted;
  RelativeErrors errors;
  /// f2 of the warm start at its own first-pass stage-1 irradiance.
  double warm_start_f2 = 0.0;
  CoOptStatus status = CoOptStatus::max_iterations;
};

namespace detail {

// splitmix64; derives independent stream seeds from one call seed.
inline std::uint64_t mix_seed(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

inline CoOptResult co_optimize(const Measurement& meas, const PvParams& warm_start,
                               const PlantConstants& plant, const CoOptConfig& cfg,
                               std::uint64_t seed) {
  cfg.validate();
  warm_start.validate();
  if (is_dark(meas, cfg.dark)) throw DegenerateInput("co_optimize: dark sample");

  std::uint64_t seed_state = seed;
  const PvParams warm = cfg.x2_bounds.clamp(warm_start);

  auto stage1 = [&](const PvParams& p, std::uint64_t s) {
    return estimate_equivalent_irradiance(meas, p, plant, cfg.x1_bounds, cfg.stage1_cfg, s,
                                          cfg.dark);
  };

  // Objective of one stage-2 search and the irradiance it pairs with.
  struct Fit {
    PvParams params;
    double g = 0.0;
    double f2 = kInfeasiblePenalty;
  };
  auto search = [&](const ParamSearchSpace& space, double g_fixed,
                    const std::vector<std::vector<double>>& seeds) {
    PsoConfig c = cfg.stage2_cfg;
    c.seed = detail::mix_seed(seed_state);
    Fit fit;
    if (!cfg.nested) {
      auto r = minimize(
          [&](std::span<const double> x) {
            return stage2_objective(space.decode(x), g_fixed, plant, meas, cfg.normalized_f2,
                                    cfg.dark);
          },
          space.box(), c, seeds);
      fit = {space.decode(r.x_best), g_fixed, r.f_best};
    } else {
      auto r = minimize(
          [&](std::span<const double> x) {
            const PvParams p = space.decode(x);
            if (!p.valid()) return kInfeasiblePenalty;
            const double g = equivalent_irradiance_exact(meas, p, plant, cfg.x1_bounds);
            return stage2_objective(p, g, plant, meas, cfg.normalized_f2, cfg.dark);
          },
          space.box(), c, seeds);
      fit.params = space.decode(r.x_best);
      fit.g = equivalent_irradiance_exact(meas, fit.params, plant, cfg.x1_bounds);
      fit.f2 = r.f_best;
    }
    return fit;
  };
  auto fit_errors = [&](const Fit& fit) {
    const auto op = try_mpp_point(fit.params, plant, EnvInputs{fit.g, meas.t_meas});
    if (!op) return RelativeErrors{1.0, 1.0};
    return relative_errors(meas, *op, cfg.dark);
  };

  CoOptResult result;
  std::optional<Fit> best;
  // Alternates the stages over one free-parameter subset. Stops once f2 is
  // within tolerance.
  auto alternate = [&](const std::vector<std::size_t>& free, PvParams incumbent,
                       bool seed_warm) {
    for (std::size_t it = 0; it < cfg.outer_iterations; ++it) {
      const double g = stage1(incumbent, detail::mix_seed(seed_state)).g_equiv;
      if (!best) {
        result.warm_start_f2 =
            stage2_objective(warm, g, plant, meas, cfg.normalized_f2, cfg.dark);
      }
      const ParamSearchSpace space(cfg.x2_bounds, free, incumbent);
      std::vector<std::vector<double>> seeds{space.encode(incumbent)};
      if (seed_warm) seeds.push_back(space.encode(warm));
      const Fit fit = search(space, g, seeds);
      ++result.outer_iters_run;
      if (!best || fit.f2 <= best->f2) best = fit;
      incumbent = fit.params;
      if (best->f2 <= cfg.convergence_tol) return;
    }
  };

  alternate({0, 1}, warm, false);
  if (fit_errors(*best).max() > cfg.tier_threshold) {
    result.tier_used = 2;
    alternate({0, 1, 2, 3, 4}, best->params, true);
  }
  if (best->f2 <= cfg.convergence_tol) result.status = CoOptStatus::converged;

  result.g_equiv = best->g;
  result.params = best->params;
  result.f2_value = best->f2;
  result.errors = fit_errors(*best);
  if (auto op = try_mpp_point(best->params, plant, EnvInputs{best->g, meas.t_meas})) {
    result.predicted = *op;
  }
  return result;
}

}  // namespace pvdt
