#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "pvdt/errors.hpp"
#include "pvdt/measurement.hpp"
#include "pvdt/sd_model.hpp"

namespace pvdt {

/// Absolute percentage error statistics of one channel.
struct ChannelErrors {
  double mape = 0.0;     ///< mean [%]
  double min_ape = 0.0;  ///< [%]
  double max_ape = 0.0;  ///< [%]
  double rmse = 0.0;     ///< in channel units
};

struct ErrorReport {
  ChannelErrors i;  ///< [A]
  ChannelErrors v;  ///< [V]
  ChannelErrors p;  ///< [W]
  std::size_t samples = 0;
};

using PredictionPair = std::pair<Measurement, OperatingPoint>;

namespace detail {

class ChannelAccumulator {
 public:
  void add(double measured, double predicted) {
    if (measured == 0.0) throw DomainError("error report: zero measured value");
    const double err = measured - predicted;
    const double ape = 100.0 * std::fabs(err) / std::fabs(measured);
    sum_ape_ += ape;
    sum_sq_ += err * err;
    min_ = std::min(min_, ape);
    max_ = std::max(max_, ape);
    ++n_;
  }

  ChannelErrors finish() const {
    const double n = static_cast<double>(n_);
    return {sum_ape_ / n, min_, max_, std::sqrt(sum_sq_ / n)};
  }

 private:
  double sum_ape_ = 0.0;
  double sum_sq_ = 0.0;
  double min_ = std::numeric_limits<double>::infinity();
  double max_ = 0.0;
  std::size_t n_ = 0;
};

}  // namespace detail

/// MAPE and RMSE per channel. Dark samples must be filtered out beforehand.
inline ErrorReport compute_error_report(std::span<const PredictionPair> pairs) {
  if (pairs.empty()) throw EmptyInput("compute_error_report: no samples");
  detail::ChannelAccumulator ci, cv, cp;
  for (const auto& [m, pred] : pairs) {
    ci.add(m.i_meas, pred.i);
    cv.add(m.v_meas, pred.v);
    cp.add(m.p_meas, pred.p);
  }
  ErrorReport r{ci.finish(), cv.finish(), cp.finish(), pairs.size()};
  // Rounding in the running sum can put the mean a hair outside [min, max]
  // when every sample has the same error.
  for (auto* c : {&r.i, &r.v, &r.p}) c->mape = std::clamp(c->mape, c->min_ape, c->max_ape);
  return r;
}

/// Transient index: the larger of the normalized overshoot and undershoot
/// relative to the steady-state value, in percent. The steady-state value is
/// the mean of the trailing `ss_tail_fraction` of the window.
inline double tri(std::span<const double> window, double ss_tail_fraction = 0.2) {
  if (window.empty()) throw DomainError("tri: empty window");
  if (!(ss_tail_fraction > 0.0 && ss_tail_fraction <= 1.0)) {
    throw DomainError("tri: tail fraction must be in (0, 1]");
  }
  const auto n = window.size();
  const auto tail = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(ss_tail_fraction * static_cast<double>(n) - 1e-9)), 1, n);
  double ssv = 0.0;
  for (std::size_t k = n - tail; k < n; ++k) ssv += window[k];
  ssv /= static_cast<double>(tail);
  if (!(ssv > 0.0)) throw DomainError("tri: steady-state value must be positive");
  const auto [lo, hi] = std::minmax_element(window.begin(), window.end());
  return std::max((*hi - ssv) / ssv, (ssv - *lo) / ssv) * 100.0;
}

}  // namespace pvdt
