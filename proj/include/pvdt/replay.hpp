#pragma once

// Stream replay of the four twin variants over resampled telemetry.
//
//   base      fixed datasheet parameters, pyranometer irradiance
//   method1   fixed datasheet parameters, equivalent irradiance
//   method2   all five parameters refit every step at pyranometer irradiance
//   proposed  equivalent irradiance plus tiered co-optimization, gated by an
//             update policy
//
// Each record holds the prediction made with the parameters in force before
// that step's update, so an update never grades itself.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pvdt/datasheet_fit.hpp"
#include "pvdt/errors.hpp"
#include "pvdt/irradiance.hpp"
#include "pvdt/measurement.hpp"
#include "pvdt/metrics.hpp"
#include "pvdt/pso.hpp"
#include "pvdt/scheduler.hpp"
#include "pvdt/sd_model.hpp"
#include "pvdt/synth.hpp"
#include "pvdt/telemetry.hpp"
#include "pvdt/two_stage.hpp"

namespace pvdt {

enum class Method { base, method1, method2, proposed };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::base: return "base";
    case Method::method1: return "method1";
    case Method::method2: return "method2";
    case Method::proposed: return "proposed";
  }
  return "unknown";
}

inline Method parse_method(const std::string& s) {
  if (s == "base") return Method::base;
  if (s == "method1") return Method::method1;
  if (s == "method2") return Method::method2;
  if (s == "proposed") return Method::proposed;
  throw ConfigError("unknown method '" + s + "' (base, method1, method2, proposed)");
}

inline bool needs_g_meas(Method m) noexcept { return m == Method::base || m == Method::method2; }

struct RunConfig {
  PlantConstants plant;
  CoOptConfig coopt;  ///< bounds, stage PSO settings, dark thresholds
  UpdatePolicy policy = UpdatePolicy::event(0.005);
  Method method = Method::proposed;
  double resample_s = 10.0;
  std::uint64_t seed = 1;
  PvParams warm_start = kDatasheetParams;
  std::optional<double> start_ts;  ///< inclusive
  std::optional<double> end_ts;    ///< exclusive
  double tri_tail_fraction = 0.2;
  double tracker_step_v = 0.5;  ///< P&O step used for the post-update transient

  void validate() const {
    plant.validate();
    coopt.validate();
    policy.validate(resample_s);
    warm_start.validate();
    if (!(resample_s > 0.0)) throw ConfigError("RunConfig: resample_s must be positive");
    if (start_ts && end_ts && !(*start_ts < *end_ts)) {
      throw ConfigError("RunConfig: start_ts must precede end_ts");
    }
    if (!(tri_tail_fraction > 0.0 && tri_tail_fraction <= 1.0)) {
      throw ConfigError("RunConfig: tri_tail_fraction must be in (0, 1]");
    }
  }
};

struct ReplayRecord {
  Measurement meas;
  bool dark = false;
  std::optional<double> g_equiv;  ///< when the method estimated one
  double g_used = 0.0;            ///< irradiance fed to the prediction
  PvParams params;                ///< parameters in force for the prediction
  OperatingPoint predicted;
  RelativeErrors errors;
  bool updated = false;
};

struct ReplayResult {
  Method method = Method::proposed;
  UpdatePolicy policy;
  std::vector<ReplayRecord> records;
  std::vector<UpdateEvent> events;
  std::optional<ErrorReport> report;  ///< empty when no daylight sample was graded
  std::size_t dropped = 0;            ///< samples removed by resampling
  std::size_t daylight = 0;
};

/// Records that enter the error report: daylight with every measured
/// channel nonzero.
inline bool graded(const ReplayRecord& r) noexcept {
  return !r.dark && r.meas.v_meas > 0.0 && r.meas.i_meas > 0.0 && r.meas.p_meas > 0.0;
}

inline std::optional<ErrorReport> report_of(std::span<const ReplayRecord> records) {
  std::vector<PredictionPair> pairs;
  for (const auto& r : records) {
    if (graded(r)) pairs.emplace_back(r.meas, r.predicted);
  }
  if (pairs.empty()) return std::nullopt;
  return compute_error_report(pairs);
}

namespace detail {

inline std::uint64_t step_seed(std::uint64_t seed, std::size_t step) noexcept {
  std::uint64_t s = seed ^ (0xD1B54A32D192ED03ULL * (static_cast<std::uint64_t>(step) + 1));
  return mix_seed(s);
}

inline OperatingPoint predict(const PvParams& p, const PlantConstants& plant, double g, double t) {
  return try_mpp_point(p, plant, EnvInputs{g, t}).value_or(OperatingPoint{});
}

// Transient index of a tracker settled on `before` when the plant follows
// `after`, over one optimization step at 1 Hz. NaN when undefined.
inline double update_tri(const PvParams& before, const PvParams& after, const RunConfig& cfg,
                         double g, double t) {
  try {
    const auto n = static_cast<std::size_t>(std::max(1.0, std::round(cfg.resample_s)));
    const auto w = tracker_transient(before, after, cfg.plant, EnvInputs{g, t}, n,
                                     cfg.tracker_step_v);
    return tri(w, cfg.tri_tail_fraction);
  } catch (const Error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

// Stage-2 refit of all five parameters at a given irradiance.
inline PvParams refit_at(const Measurement& m, double g, const PvParams& incumbent,
                         const RunConfig& cfg, std::uint64_t seed) {
  const ParamSearchSpace space(cfg.coopt.x2_bounds, {0, 1, 2, 3, 4}, incumbent);
  PsoConfig c = cfg.coopt.stage2_cfg;
  c.seed = seed;
  const std::vector<std::vector<double>> seeds{space.encode(cfg.coopt.x2_bounds.clamp(incumbent))};
  const auto r = minimize(
      [&](std::span<const double> x) {
        return stage2_objective(space.decode(x), g, cfg.plant, m, cfg.coopt.normalized_f2,
                                cfg.coopt.dark);
      },
      space.box(), c, seeds);
  if (r.f_best >= kInfeasiblePenalty) return incumbent;
  return space.decode(r.x_best);
}

}  // namespace detail

/// Replays already-loaded telemetry. `stream` must be sorted by timestamp.
inline ReplayResult replay(const RunConfig& cfg, std::span<const Measurement> stream) {
  cfg.validate();

  std::vector<Measurement> window;
  for (const auto& m : stream) {
    if (cfg.start_ts && m.ts < *cfg.start_ts) continue;
    if (cfg.end_ts && m.ts >= *cfg.end_ts) continue;
    window.push_back(m);
  }
  if (needs_g_meas(cfg.method)) {
    for (const auto& m : window) {
      if (!m.g_meas) {
        throw ConfigError("method " + to_string(cfg.method) + " needs a g_meas column");
      }
    }
  }
  auto resampled = resample(window, cfg.resample_s);

  ReplayResult out;
  out.method = cfg.method;
  out.policy = cfg.policy;
  out.dropped = resampled.dropped;
  out.records.reserve(resampled.samples.size());

  const auto& plant = cfg.plant;
  const auto& dark = cfg.coopt.dark;
  PvParams incumbent = cfg.coopt.x2_bounds.clamp(cfg.warm_start);
  double last_update = resampled.samples.empty() ? 0.0 : resampled.samples.front().ts;

  for (std::size_t k = 0; k < resampled.samples.size(); ++k) {
    const Measurement& m = resampled.samples[k];
    ReplayRecord rec;
    rec.meas = m;
    rec.params = incumbent;
    if (is_dark(m, dark)) {
      rec.dark = true;
      out.records.push_back(rec);
      continue;
    }
    ++out.daylight;
    std::uint64_t seed_state = detail::step_seed(cfg.seed, k);

    switch (cfg.method) {
      case Method::base:
        rec.g_used = *m.g_meas;
        break;
      case Method::method1:
      case Method::proposed: {
        const auto est = estimate_equivalent_irradiance(m, incumbent, plant, cfg.coopt.x1_bounds,
                                                        cfg.coopt.stage1_cfg,
                                                        detail::mix_seed(seed_state), dark);
        rec.g_equiv = est.g_equiv;
        rec.g_used = est.g_equiv;
        break;
      }
      case Method::method2:
        rec.g_used = *m.g_meas;
        break;
    }
    rec.predicted = detail::predict(incumbent, plant, rec.g_used, m.t_meas);
    rec.errors = relative_errors(m, rec.predicted, dark);

    if (cfg.method == Method::method2) {
      const PvParams next =
          detail::refit_at(m, rec.g_used, incumbent, cfg, detail::mix_seed(seed_state));
      const auto e = relative_errors(m, rec.predicted, dark);
      UpdateEvent ev{m.ts, incumbent, next, e.i, e.v, 2, rec.g_used, 0.0};
      ev.tri_pct = detail::update_tri(incumbent, next, cfg, rec.g_used, m.t_meas);
      out.events.push_back(ev);
      rec.updated = true;
      incumbent = next;
      last_update = m.ts;
    } else if (cfg.method == Method::proposed &&
               should_update(cfg.policy, m.ts, last_update, m, rec.predicted, dark)) {
      const auto r = co_optimize(m, incumbent, plant, cfg.coopt, detail::mix_seed(seed_state));
      UpdateEvent ev{m.ts,        incumbent,   r.params, rec.errors.i, rec.errors.v,
                     r.tier_used, r.g_equiv, 0.0};
      ev.tri_pct = detail::update_tri(incumbent, r.params, cfg, r.g_equiv, m.t_meas);
      out.events.push_back(ev);
      rec.updated = true;
      incumbent = r.params;
      last_update = m.ts;
    }
    out.records.push_back(rec);
  }
  out.report = report_of(out.records);
  return out;
}

}  // namespace pvdt
