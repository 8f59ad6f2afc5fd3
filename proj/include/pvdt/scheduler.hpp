#pragma once

// When to push a parameter update: on a fixed schedule, or when the twin's
// prediction drifts past a relative-error threshold.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "pvdt/errors.hpp"
#include "pvdt/measurement.hpp"
#include "pvdt/sd_model.hpp"
#include "pvdt/two_stage.hpp"

namespace pvdt {

enum class PolicyKind { fixed_interval, event_trigger };

struct UpdatePolicy {
  PolicyKind kind = PolicyKind::event_trigger;
  double interval_s = 10.0;
  double threshold = 0.005;

  static UpdatePolicy fixed(double seconds) { return {PolicyKind::fixed_interval, seconds, 0.005}; }
  static UpdatePolicy event(double threshold) { return {PolicyKind::event_trigger, 10.0, threshold}; }

  /// `resolution_s` is the optimization step; fixed intervals must be a
  /// positive multiple of it.
  void validate(double resolution_s = 10.0) const {
    if (kind == PolicyKind::fixed_interval) {
      const double n = interval_s / resolution_s;
      if (!(interval_s > 0.0) || std::fabs(n - std::round(n)) > 1e-9 || std::round(n) < 1.0) {
        throw ConfigError("UpdatePolicy: interval must be a positive multiple of " +
                          std::to_string(resolution_s) + " s");
      }
    } else if (!(threshold > 0.0)) {
      throw ConfigError("UpdatePolicy: event threshold must be positive");
    }
  }

  /// "fixed:60" or "event:0.005".
  std::string label() const {
    if (kind == PolicyKind::fixed_interval) {
      return "fixed:" + std::to_string(static_cast<long long>(std::llround(interval_s)));
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "event:%g", threshold);
    return buf;
  }
};

/// Parses "fixed:60", "event:0.005", or a bare number of seconds.
inline UpdatePolicy parse_policy(const std::string& text) {
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(s, &used);
    } catch (const std::exception&) {
      throw ConfigError("bad policy '" + text + "'");
    }
    if (used != s.size()) throw ConfigError("bad policy '" + text + "'");
    return x;
  };
  const auto colon = text.find(':');
  if (colon == std::string::npos) return UpdatePolicy::fixed(number(text));
  const auto kind = text.substr(0, colon);
  const auto arg = text.substr(colon + 1);
  if (kind == "fixed") return UpdatePolicy::fixed(number(arg));
  if (kind == "event") return UpdatePolicy::event(number(arg));
  throw ConfigError("unknown policy kind '" + kind + "'");
}

/// Policies compared in the update-strategy study.
inline std::vector<UpdatePolicy> standard_policy_set(double event_threshold = 0.005) {
  std::vector<UpdatePolicy> out;
  for (double s : {10.0, 60.0, 300.0, 600.0, 900.0, 1800.0, 3600.0}) {
    out.push_back(UpdatePolicy::fixed(s));
  }
  out.push_back(UpdatePolicy::event(event_threshold));
  return out;
}

struct UpdateEvent {
  double ts = 0.0;
  PvParams prev_params;
  PvParams new_params;
  double trigger_error_i = 0.0;
  double trigger_error_v = 0.0;
  int tier_used = 1;
  double g_equiv = 0.0;
  double tri_pct = 0.0;  ///< transient index of the tracker response to the change
};

/// `predicted` is the incumbent parameters' prediction at the sample's
/// equivalent irradiance.
inline bool should_update(const UpdatePolicy& policy, double now, double last_update,
                          const Measurement& meas, const OperatingPoint& predicted,
                          const DarkThresholds& dark = {}) noexcept {
  if (policy.kind == PolicyKind::fixed_interval) {
    // Timestamps are whole steps apart; the slack absorbs float jitter.
    return now - last_update >= policy.interval_s - 1e-6;
  }
  const auto e = relative_errors(meas, predicted, dark);
  return e.i > policy.threshold || e.v > policy.threshold;
}

}  // namespace pvdt
