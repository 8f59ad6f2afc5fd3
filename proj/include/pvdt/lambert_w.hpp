#pragma once

/**
 * \file lambert_w.hpp
 * \brief Principal branch of the Lambert W function on the real line.
 *
 * W0(x) is the inverse of w -> w*exp(w) for w >= -1, defined for x >= -1/e.
 * A branch-appropriate initial guess is refined by Halley iteration in the
 * scaled form s(w) = w - x*exp(-w), which avoids overflow of w*exp(w) for
 * large arguments.
 */

#include <cmath>
#include <limits>
#include <string>

#include "pvdt/errors.hpp"

namespace pvdt {

inline constexpr double kEuler = 2.718281828459045235360287471352662;
inline constexpr double kInvEuler = 0.367879441171442321595523770161460867;

namespace detail {

inline double lambert_w0_guess(double x) {
  if (x < -0.32) {
    // Series about the branch point x = -1/e.
    const double p = std::sqrt(std::fmax(0.0, 2.0 * (kEuler * x + 1.0)));
    return -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0)));
  }
  if (std::fabs(x) < 1e-3) return x * (1.0 - x * (1.0 - 1.5 * x));
  if (x < kEuler) {
    // Winitzki's uniform approximation.
    const double l = std::log1p(x);
    return l * (1.0 - std::log1p(l) / (2.0 + l));
  }
  const double l1 = std::log(x);
  const double l2 = std::log(l1);
  return l1 - l2 + l2 / l1;
}

}  // namespace detail

/// Principal-branch Lambert W. Throws DomainError for x < -1/e or NaN.
inline double lambert_w0(double x) {
  if (std::isnan(x)) throw DomainError("lambert_w0: NaN argument");
  if (x < -kInvEuler) throw DomainError("lambert_w0: argument below -1/e: " + std::to_string(x));
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return x;
  if (x == -kInvEuler) return -1.0;

  double w = detail::lambert_w0_guess(x);
  constexpr double eps = std::numeric_limits<double>::epsilon();
  for (int iter = 0; iter < 10; ++iter) {
    const double wp1 = w + 1.0;
    if (wp1 == 0.0) break;
    const double s = w - x * std::exp(-w);  // (w e^w - x) e^-w
    if (s == 0.0) break;
    const double step = s / (wp1 - (w + 2.0) * s / (2.0 * wp1));
    w -= step;
    if (std::fabs(step) <= 4.0 * eps * std::fabs(w)) break;
  }
  return w;
}

}  // namespace pvdt
