#pragma once

#include <cmath>
#include <optional>

namespace pvdt {

/// One telemetry sample.
struct Measurement {
  double ts = 0.0;      ///< seconds
  double v_meas = 0.0;  ///< [V]
  double i_meas = 0.0;  ///< [A]
  double t_meas = 25.0; ///< [degC]
  std::optional<double> g_meas;  ///< pyranometer irradiance [W/m^2]
  double p_meas = 0.0;  ///< [W]

  bool operator==(const Measurement&) const = default;
};

inline Measurement make_measurement(double ts, double v, double i, double t,
                                    std::optional<double> g = std::nullopt) {
  return Measurement{ts, v, i, t, g, v * i};
}

/// A sample is dark when both voltage and current are below these floors.
struct DarkThresholds {
  double v = 1.0;  ///< [V]
  double i = 0.5;  ///< [A]
};

inline bool is_dark(const Measurement& m, const DarkThresholds& dark = {}) noexcept {
  return m.v_meas < dark.v && m.i_meas < dark.i;
}

struct Interval {
  double lo = 0.0;
  double hi = 1000.0;
};

}  // namespace pvdt
