#pragma once

// Synthetic plant telemetry for tests and demonstrations.
//
// A one-second irradiance profile (clear arc, arc with cloud dips, or an
// attenuated overcast arc) drives the single-diode model with optionally
// drifting parameters. Operating points are taken at the closed-form maximum
// power point or produced by a discrete perturb-and-observe tracker on the
// implicit I-V curve. Multiplicative Gaussian noise is applied to V and I.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pvdt/errors.hpp"
#include "pvdt/measurement.hpp"
#include "pvdt/sd_model.hpp"
#include "pvdt/telemetry.hpp"
#include "pvdt/two_stage.hpp"

namespace pvdt {

/// Discrete perturb-and-observe maximum power point tracker.
class PerturbObserveTracker {
 public:
  PerturbObserveTracker(double v_start, double step_v) : v_(v_start), step_(step_v) {}

  /// Operates at the current reference voltage, then perturbs it for the
  /// next call.
  OperatingPoint step(const PvParams& params, const PlantConstants& plant, const EnvInputs& env) {
    OperatingPoint op;
    if (env.g >= kDarkIrradiance) {
      op.v = std::max(v_, 0.0);
      op.i = std::max(current_at_voltage(params, plant, env, op.v), 0.0);
      op.p = op.v * op.i;
    }
    if (op.p < last_p_) direction_ = -direction_;
    last_p_ = op.p;
    v_ = std::max(v_ + direction_ * step_, 0.0);
    return op;
  }

  double reference() const noexcept { return v_; }

 private:
  double v_;
  double step_;
  double direction_ = 1.0;
  double last_p_ = 0.0;
};

/// Power seen by a tracker that had settled at the old parameters' maximum
/// power point when the plant switches to `after`.
inline std::vector<double> tracker_transient(const PvParams& before, const PvParams& after,
                                             const PlantConstants& plant, const EnvInputs& env,
                                             std::size_t samples = 10, double step_v = 0.5) {
  const auto start = mpp_point(before, plant, env);
  PerturbObserveTracker tracker(start.v, step_v);
  std::vector<double> power;
  power.reserve(samples);
  for (std::size_t k = 0; k < samples; ++k) power.push_back(tracker.step(after, plant, env).p);
  return power;
}

enum class Scenario { clear, cloudy, overcast };

inline Scenario parse_scenario(const std::string& s) {
  if (s == "clear") return Scenario::clear;
  if (s == "cloudy") return Scenario::cloudy;
  if (s == "overcast") return Scenario::overcast;
  throw ConfigError("unknown scenario '" + s + "' (clear, cloudy, overcast)");
}

enum class SensorModel { aligned, decorrelated, absent };

inline SensorModel parse_sensor_model(const std::string& s) {
  if (s == "aligned") return SensorModel::aligned;
  if (s == "decorrelated") return SensorModel::decorrelated;
  if (s == "absent") return SensorModel::absent;
  throw ConfigError("unknown sensor model '" + s + "' (aligned, decorrelated, absent)");
}

/// Time-varying ground-truth parameters.
struct ParamDrift {
  double rs_delta = 0.0;  ///< linear change of rs over the run [ohm]
  double rs_wave = 0.0;   ///< amplitude of a sinusoidal rs component [ohm]
  double rs_wave_period_s = 3600.0;
  double rsh_delta = 0.0;  ///< linear change of rsh over the run [ohm]
  std::optional<double> step_at_s;  ///< switch to step_params from this offset
  PvParams step_params;

  PvParams at(const PvParams& base, double t, double duration) const {
    if (step_at_s && t >= *step_at_s) return step_params;
    PvParams p = base;
    const double frac = duration > 0.0 ? t / duration : 0.0;
    p.rs += rs_delta * frac + rs_wave * std::sin(2.0 * std::numbers::pi * t / rs_wave_period_s);
    p.rsh += rsh_delta * frac;
    return p;
  }
};

struct SynthOptions {
  Scenario scenario = Scenario::cloudy;
  double duration_s = 10800.0;
  double noise = 0.005;  ///< relative std of V and I noise
  std::uint64_t seed = 1;
  bool tracker = false;
  double tracker_step_v = 0.5;
  double start_hour = 10.5;  ///< local solar time of the first sample
  double start_epoch = 1667865600.0;  ///< 2022-11-08T00:00:00Z
  double peak_irradiance = 950.0;
  double ambient_c = 12.0;
  double temp_rise_per_g = 0.028;  ///< steady-state cell heating [degC per W/m^2]
  double thermal_tau_s = 300.0;
  SensorModel sensor = SensorModel::aligned;
  double sensor_noise = 0.01;
  ParamDrift drift;
};

struct CloudEvent {
  double start_s = 0.0;
  double duration_s = 0.0;
  double depth = 0.0;  ///< fractional irradiance reduction at the center
};

struct TruthRow {
  double ts = 0.0;
  double g = 0.0;
  double t_c = 0.0;
  PvParams params;
};

struct SynthOutput {
  std::vector<Measurement> telemetry;
  std::vector<TruthRow> truth;
  std::vector<CloudEvent> clouds;         ///< dips seen by the plant
  std::vector<CloudEvent> sensor_clouds;  ///< dips seen only by a decorrelated sensor
};

namespace detail {

inline double clear_sky(double hour, double peak) {
  if (hour <= 6.0 || hour >= 18.0) return 0.0;
  return peak * std::pow(std::sin(std::numbers::pi * (hour - 6.0) / 12.0), 1.2);
}

inline std::vector<CloudEvent> draw_clouds(std::mt19937_64& rng, double duration, double mean_gap,
                                           double min_depth, double max_depth) {
  std::exponential_distribution<double> gap(1.0 / mean_gap);
  std::uniform_real_distribution<double> len(20.0, 240.0);
  std::uniform_real_distribution<double> depth(min_depth, max_depth);
  std::vector<CloudEvent> out;
  double t = gap(rng);
  while (t < duration) {
    const double l = len(rng);
    out.push_back({t, l, depth(rng)});
    t += l + gap(rng);
  }
  return out;
}

// Transmittance of a set of dips with raised-cosine edges.
inline double transmittance(const std::vector<CloudEvent>& clouds, double t) {
  double tr = 1.0;
  for (const auto& c : clouds) {
    if (t < c.start_s || t > c.start_s + c.duration_s) continue;
    const double ramp = std::min(15.0, c.duration_s / 3.0);
    const double into = std::min(t - c.start_s, c.start_s + c.duration_s - t);
    const double shape =
        into >= ramp ? 1.0 : 0.5 * (1.0 - std::cos(std::numbers::pi * into / ramp));
    tr *= 1.0 - c.depth * shape;
  }
  return tr;
}

}  // namespace detail

inline SynthOutput synth_plant(const PvParams& params, const PlantConstants& plant,
                               const SynthOptions& opt) {
  params.validate();
  if (!(opt.duration_s > 0.0)) throw ConfigError("synth: duration must be positive");
  if (!(opt.noise >= 0.0)) throw ConfigError("synth: noise must be >= 0");

  std::uint64_t state = opt.seed;
  std::mt19937_64 cloud_rng(detail::mix_seed(state));
  std::mt19937_64 ripple_rng(detail::mix_seed(state));
  std::mt19937_64 noise_rng(detail::mix_seed(state));
  std::mt19937_64 sensor_rng(detail::mix_seed(state));
  std::normal_distribution<double> gauss(0.0, 1.0);

  SynthOutput out;
  double attenuation = 1.0;
  double ripple_sd = 0.0;
  switch (opt.scenario) {
    case Scenario::clear:
      break;
    case Scenario::cloudy:
      out.clouds = detail::draw_clouds(cloud_rng, opt.duration_s, 300.0, 0.15, 0.75);
      ripple_sd = 0.01;
      break;
    case Scenario::overcast:
      attenuation = 0.3;
      out.clouds = detail::draw_clouds(cloud_rng, opt.duration_s, 900.0, 0.05, 0.25);
      ripple_sd = 0.01;
      break;
  }
  if (opt.sensor == SensorModel::decorrelated) {
    out.sensor_clouds = detail::draw_clouds(sensor_rng, opt.duration_s, 400.0, 0.2, 0.7);
  }

  const auto n = static_cast<std::size_t>(std::floor(opt.duration_s));
  double ripple = 0.0;
  double t_cell = opt.ambient_c;
  std::optional<PerturbObserveTracker> tracker;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k);
    const double hour = opt.start_hour + t / 3600.0;
    const double sky = detail::clear_sky(hour, opt.peak_irradiance) * attenuation;
    if (ripple_sd > 0.0) ripple = 0.9 * ripple + ripple_sd * std::sqrt(1.0 - 0.81) * gauss(ripple_rng);
    const double g = std::clamp(sky * detail::transmittance(out.clouds, t) * (1.0 + ripple), 0.0,
                                1000.0);
    const double t_target = opt.ambient_c + opt.temp_rise_per_g * g;
    t_cell = k == 0 ? t_target : t_cell + (t_target - t_cell) / opt.thermal_tau_s;
    const PvParams p = opt.drift.at(params, t, opt.duration_s);
    const EnvInputs env{g, t_cell};

    OperatingPoint op;
    if (opt.tracker) {
      if (!tracker) {
        const double v0 = g >= kDarkIrradiance ? mpp_point(p, plant, env).v : 0.0;
        tracker.emplace(v0, opt.tracker_step_v);
      }
      op = tracker->step(p, plant, env);
    } else {
      op = mpp_point(p, plant, env);
    }
    const double v = std::max(0.0, op.v * (1.0 + opt.noise * gauss(noise_rng)));
    const double i = std::max(0.0, op.i * (1.0 + opt.noise * gauss(noise_rng)));

    Measurement m;
    m.ts = opt.start_epoch + opt.start_hour * 3600.0 + t;
    m.v_meas = v;
    m.i_meas = i;
    m.t_meas = t_cell;
    m.p_meas = v * i;
    if (opt.sensor == SensorModel::aligned) {
      m.g_meas = std::clamp(g * (1.0 + opt.sensor_noise * gauss(sensor_rng)), 0.0, 1500.0);
    } else if (opt.sensor == SensorModel::decorrelated) {
      // Separate cloud field plus a tilt mismatch that grows over the run.
      const double tilt = 1.0 - 0.45 * t / opt.duration_s;
      const double gs = sky * detail::transmittance(out.sensor_clouds, t) * tilt;
      m.g_meas = std::clamp(gs * (1.0 + opt.sensor_noise * gauss(sensor_rng)), 0.0, 1500.0);
    }
    out.telemetry.push_back(m);
    out.truth.push_back({m.ts, g, t_cell, p});
  }
  return out;
}

}  // namespace pvdt
