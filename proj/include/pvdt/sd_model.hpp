#pragma once

// Lumped single-diode photovoltaic model.
//
//   I = Iph - Is (exp((V + I Rs) / a) - 1) - (V + I Rs) / Rsh
//
// with temperature-corrected photocurrent Iph, modified ideality factor a and
// saturation current Is. The maximum power point is available in closed form
// through the Lambert W function; the implicit I-V curve is solved
// numerically and serves as an independent check of that closed form.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "pvdt/errors.hpp"
#include "pvdt/lambert_w.hpp"

namespace pvdt {

/// The five fitted single-diode parameters.
struct PvParams {
  double rs = 0.0;    ///< series resistance [ohm]
  double rsh = 0.0;   ///< shunt resistance [ohm]
  double kd = 0.0;    ///< diode ideality coefficient [-]
  double iph0 = 0.0;  ///< photocurrent at the reference irradiance and 25 degC [A]
  double is0 = 0.0;   ///< diode saturation current at 25 degC [A]

  static constexpr std::size_t size = 5;
  static constexpr std::array<std::string_view, size> names{"rs", "rsh", "kd", "iph0", "is0"};

  std::array<double, size> to_array() const { return {rs, rsh, kd, iph0, is0}; }

  static PvParams from_array(std::span<const double, size> x) {
    return PvParams{x[0], x[1], x[2], x[3], x[4]};
  }

  double operator[](std::size_t k) const { return to_array()[k]; }

  bool valid() const noexcept {
    return rs > 0.0 && rsh > 0.0 && kd > 0.0 && iph0 > 0.0 && is0 > 0.0 && rs < rsh &&
           std::isfinite(rs) && std::isfinite(rsh) && std::isfinite(kd) && std::isfinite(iph0) &&
           std::isfinite(is0);
  }

  void validate() const {
    if (!valid()) {
      throw DomainError("PvParams: all parameters must be finite and positive with rs < rsh");
    }
  }

  bool operator==(const PvParams&) const = default;
};

/// Parameters from the offline datasheet fit; a standard 72-cell module.
inline constexpr PvParams kDatasheetParams{0.279, 216.990, 1.086, 11.134, 3.405e-10};

/// Plant-level constants that are configured, not fitted.
struct PlantConstants {
  int ns = 72;                          ///< series-connected cells in the lumped unit
  double alpha_isc = 0.0005;            ///< short-circuit current temperature coefficient [1/degC]
  double k_boltzmann = 1.380649e-23;    ///< [J/K]
  double q_electron = 1.602176634e-19;  ///< [C]
  double t_stc = 298.15;                ///< [K]
  double t_fp = 273.15;                 ///< [K]
  double exp_coeff = 47.1;              ///< saturation-current temperature exponent
  /// Irradiance at which iph0 is quoted [W/m^2]. 1 gives the raw g*iph0 product.
  double g_ref = 1000.0;
  /// Use W(e (Iph/Is + 1)) instead of W(Iph e / Is) for the MPP auxiliary value.
  bool exact_omega = false;
  double t_min = -40.0;  ///< accepted cell temperature range [degC]
  double t_max = 90.0;

  void validate() const {
    if (ns < 1) throw DomainError("PlantConstants: ns must be >= 1");
    if (t_stc != 298.15 || t_fp != 273.15) {
      throw DomainError("PlantConstants: t_stc and t_fp are fixed at 298.15 K and 273.15 K");
    }
    if (!(g_ref > 0.0)) throw DomainError("PlantConstants: g_ref must be positive");
    if (!(t_min < t_max)) throw DomainError("PlantConstants: empty temperature range");
  }
};

/// Operating environment: irradiance [W/m^2] and cell temperature [degC].
struct EnvInputs {
  double g = 0.0;
  double t_c = 25.0;
};

struct DerivedQuantities {
  double i_ph = 0.0;   ///< photocurrent [A]
  double a = 0.0;      ///< modified ideality factor [V]
  double i_s = 0.0;    ///< saturation current [A]
  double omega = 0.0;  ///< Lambert-W auxiliary value [-]
};

struct OperatingPoint {
  double v = 0.0;
  double i = 0.0;
  double p = 0.0;

  bool operator==(const OperatingPoint&) const = default;
};

namespace detail {

inline void check_env(const PlantConstants& plant, const EnvInputs& env) {
  if (!(env.g >= 0.0) || !std::isfinite(env.g)) {
    throw DomainError("EnvInputs: irradiance must be finite and >= 0");
  }
  if (!(env.t_c >= plant.t_min && env.t_c <= plant.t_max)) {
    throw DomainError("EnvInputs: temperature " + std::to_string(env.t_c) +
                      " degC outside configured range");
  }
}

// Same as derive_quantities without input validation; nullopt when the
// Lambert W argument is not finite.
inline std::optional<DerivedQuantities> derive_unchecked(const PvParams& p,
                                                         const PlantConstants& plant,
                                                         const EnvInputs& env) noexcept {
  const double t_k = env.t_c + plant.t_fp;
  const double t_ratio = t_k / plant.t_stc;
  DerivedQuantities d;
  d.i_ph = env.g / plant.g_ref * p.iph0 * (1.0 + (env.t_c - 25.0) * plant.alpha_isc);
  d.a = p.kd * (plant.k_boltzmann * plant.t_stc / plant.q_electron) * plant.ns * t_ratio;
  d.i_s = p.is0 * t_ratio * t_ratio * t_ratio *
          std::exp(plant.exp_coeff * (1.0 - plant.t_stc / t_k));
  const double arg =
      plant.exact_omega ? kEuler * (d.i_ph / d.i_s + 1.0) : d.i_ph * kEuler / d.i_s;
  if (!std::isfinite(arg) || arg < 0.0 || !(d.i_s > 0.0)) return std::nullopt;
  d.omega = lambert_w0(arg);
  return d;
}

}  // namespace detail

/// Photocurrent, modified ideality factor, saturation current and the MPP
/// auxiliary value at the given irradiance and temperature.
inline DerivedQuantities derive_quantities(const PvParams& params, const PlantConstants& plant,
                                           const EnvInputs& env) {
  params.validate();
  detail::check_env(plant, env);
  auto d = detail::derive_unchecked(params, plant, env);
  if (!d) throw DomainError("derive_quantities: Lambert W argument overflows or is negative");
  return *d;
}

/// Irradiance below which the model is treated as dark (zero output).
inline constexpr double kDarkIrradiance = 1.0;

namespace detail {

inline std::optional<OperatingPoint> mpp_from(const PvParams& p,
                                              const DerivedQuantities& d) noexcept {
  if (!(d.omega > 1.0)) return std::nullopt;
  const double shade = 1.0 - 1.0 / d.omega;
  OperatingPoint op;
  op.v = (1.0 + p.rs / p.rsh) * d.a * (d.omega - 1.0) - p.rs * d.i_ph * shade;
  op.i = d.i_ph * shade - d.a * (d.omega - 1.0) / p.rsh;
  op.p = op.v * op.i;
  return op;
}

}  // namespace detail

/// Closed-form maximum power point. Returns a zero-power point for
/// g < 1 W/m^2 and throws DegenerateError when omega <= 1.
inline OperatingPoint mpp_point(const PvParams& params, const PlantConstants& plant,
                                const EnvInputs& env) {
  params.validate();
  detail::check_env(plant, env);
  if (env.g < kDarkIrradiance) return OperatingPoint{};
  const auto d = detail::derive_unchecked(params, plant, env);
  if (!d) throw DomainError("mpp_point: Lambert W argument overflows or is negative");
  auto op = detail::mpp_from(params, *d);
  if (!op) throw DegenerateError("mpp_point: omega <= 1, no maximum power point");
  return *op;
}

/// Non-throwing variant for objective functions. nullopt covers every case
/// where mpp_point would throw or return the dark zero point.
inline std::optional<OperatingPoint> try_mpp_point(const PvParams& params,
                                                   const PlantConstants& plant,
                                                   const EnvInputs& env) noexcept {
  if (!params.valid() || env.g < kDarkIrradiance) return std::nullopt;
  const auto d = detail::derive_unchecked(params, plant, env);
  if (!d) return std::nullopt;
  return detail::mpp_from(params, *d);
}

namespace detail {

enum class SolveStatus { ok, not_converged };

struct CurrentSolve {
  double i = 0.0;
  SolveStatus status = SolveStatus::ok;
};

// Newton iteration on F(i) = i_ph - i_s (exp((v + i rs)/a) - 1) - (v + i rs)/rsh - i,
// safeguarded by bisection. F is strictly decreasing, F(-v/rs) >= 0 and
// F(i_ph) <= 0, so the root is unique and bracketed.
inline CurrentSolve solve_current(const PvParams& p, const DerivedQuantities& d, double v,
                                  int max_iterations) noexcept {
  const double rs = p.rs;
  const double rsh = p.rsh;
  auto residual = [&](double i) {
    const double vd = v + i * rs;
    return d.i_ph - d.i_s * std::expm1(std::fmin(vd / d.a, 700.0)) - vd / rsh - i;
  };
  double lo = -v / rs;
  double hi = d.i_ph;
  if (hi <= lo) return {lo, SolveStatus::ok};
  const double tol = 1e-12 * std::max(1.0, d.i_ph);

  double i = hi;
  for (int iter = 0; iter < max_iterations; ++iter) {
    const double f = residual(i);
    if (std::fabs(f) <= tol) return {i, SolveStatus::ok};
    if (f > 0.0) lo = i; else hi = i;
    const double vd = v + i * rs;
    const double slope = -d.i_s * std::exp(std::fmin(vd / d.a, 700.0)) * rs / d.a - rs / rsh - 1.0;
    double next = i - f / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    i = next;
  }
  return {i, std::fabs(residual(i)) <= tol ? SolveStatus::ok : SolveStatus::not_converged};
}

}  // namespace detail

/// Terminal current at voltage v on the implicit I-V curve.
inline double current_at_voltage(const PvParams& params, const PlantConstants& plant,
                                 const EnvInputs& env, double v, int max_iterations = 100) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw DomainError("current_at_voltage: voltage must be finite and >= 0");
  }
  const auto d = derive_quantities(params, plant, env);
  const auto r = detail::solve_current(params, d, v, max_iterations);
  if (r.status != detail::SolveStatus::ok) {
    throw ConvergenceError("current_at_voltage: no convergence after " +
                           std::to_string(max_iterations) + " iterations");
  }
  return r.i;
}

/// Non-throwing KCL residual; nullopt when the logarithm argument is <= 0.
inline std::optional<double> try_kcl_residual(const PvParams& params, const PlantConstants& plant,
                                              const EnvInputs& env, double v,
                                              double i) noexcept {
  const double t_k = env.t_c + plant.t_fp;
  const double t_ratio = t_k / plant.t_stc;
  const double i_ph = env.g / plant.g_ref * params.iph0 * (1.0 + (env.t_c - 25.0) * plant.alpha_isc);
  const double a = params.kd * (plant.k_boltzmann * plant.t_stc / plant.q_electron) * plant.ns * t_ratio;
  const double i_s = params.is0 * t_ratio * t_ratio * t_ratio *
                     std::exp(plant.exp_coeff * (1.0 - plant.t_stc / t_k));
  const double arg = (i_ph - i - (v + i * params.rs) / params.rsh) / i_s + 1.0;
  if (!(arg > 0.0) || !std::isfinite(arg)) return std::nullopt;
  return -v - i * params.rs + a * std::log(arg);
}

/// KCL residual f1 = -v - i rs + a ln[(i_ph - i - (v + i rs)/rsh)/i_s + 1].
/// Zero exactly on the model I-V curve. Throws InfeasibleError when the
/// measured current exceeds what the photocurrent can supply.
inline double kcl_residual(const PvParams& params, const PlantConstants& plant,
                           const EnvInputs& env, double v, double i) {
  params.validate();
  detail::check_env(plant, env);
  auto f = try_kcl_residual(params, plant, env, v, i);
  if (!f) throw InfeasibleError("kcl_residual: logarithm argument is not positive");
  return *f;
}

}  // namespace pvdt
