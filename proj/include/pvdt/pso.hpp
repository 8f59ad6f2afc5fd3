#pragma once

// Bounded particle-swarm minimizer.
//
// Each iteration applies
//   v <- w v + c1 r1 (p_best - x) + c2 r2 (g_best - x),   x <- x + v
// with fresh r1, r2 ~ U(0,1) per particle and dimension. Velocities are
// clamped to v_max_fraction of each dimension's range; a position that leaves
// the box is clamped onto it and the offending velocity component zeroed.
// Objective values of one iteration may be computed by several worker
// threads; everything that touches the random stream is sequential, so
// results depend only on the seed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "pvdt/errors.hpp"

namespace pvdt {

struct PsoConfig {
  std::size_t n_particles = 20;
  std::size_t n_iterations = 50;
  double c1 = 0.4;  ///< cognitive coefficient
  double c2 = 0.4;  ///< social coefficient
  double w = 0.5;   ///< inertia weight
  double v_max_fraction = 0.2;
  std::uint64_t seed = 0;
  /// Stop once g_best improved by less than early_stop_tol over this many
  /// iterations; 0 disables early stopping.
  std::size_t early_stop_window = 0;
  double early_stop_tol = 1e-10;
  std::size_t workers = 1;

  void validate() const {
    if (n_particles < 2) throw ConfigError("PsoConfig: n_particles must be >= 2");
    if (!(c1 >= 0.0) || !(c2 >= 0.0)) throw ConfigError("PsoConfig: c1 and c2 must be >= 0");
    if (!(w > 0.0 && w < 1.0)) throw ConfigError("PsoConfig: inertia weight must be in (0, 1)");
    if (!(v_max_fraction > 0.0)) throw ConfigError("PsoConfig: v_max_fraction must be positive");
    if (workers < 1) throw ConfigError("PsoConfig: workers must be >= 1");
  }
};

struct Bounds {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dim() const noexcept { return lower.size(); }

  void validate() const {
    if (lower.empty() || lower.size() != upper.size()) {
      throw ConfigError("Bounds: lower and upper must be nonempty and of equal size");
    }
    for (std::size_t d = 0; d < lower.size(); ++d) {
      if (!(lower[d] < upper[d]) || !std::isfinite(lower[d]) || !std::isfinite(upper[d])) {
        throw ConfigError("Bounds: need finite lower < upper in dimension " + std::to_string(d));
      }
    }
  }

  bool contains(std::span<const double> x) const noexcept {
    if (x.size() != dim()) return false;
    for (std::size_t d = 0; d < dim(); ++d) {
      if (!(x[d] >= lower[d] && x[d] <= upper[d])) return false;
    }
    return true;
  }

  void clamp(std::span<double> x) const noexcept {
    for (std::size_t d = 0; d < dim(); ++d) x[d] = std::clamp(x[d], lower[d], upper[d]);
  }
};

struct SwarmState {
  std::vector<std::vector<double>> positions;
  std::vector<std::vector<double>> velocities;
  std::vector<double> values;
  std::vector<std::vector<double>> p_best;
  std::vector<double> p_best_value;
  std::vector<double> g_best;
  double g_best_value = std::numeric_limits<double>::infinity();
  std::size_t iteration = 0;
};

struct PsoResult {
  std::vector<double> x_best;
  double f_best = std::numeric_limits<double>::infinity();
  std::vector<double> trace;  ///< g_best value after initialization and each iteration
  std::size_t evaluations = 0;
};

namespace detail {

template <class Objective>
double safe_eval(Objective& f, std::span<const double> x) {
  const double y = f(x);
  return std::isnan(y) ? std::numeric_limits<double>::infinity() : y;
}

template <class Objective>
void evaluate_all(Objective& f, const std::vector<std::vector<double>>& xs,
                  std::vector<double>& out, std::size_t workers) {
  out.resize(xs.size());
  if (workers <= 1 || xs.size() < 2) {
    for (std::size_t k = 0; k < xs.size(); ++k) out[k] = safe_eval(f, xs[k]);
    return;
  }
  const std::size_t n = std::min(workers, xs.size());
  std::vector<std::jthread> pool;
  pool.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t k = t; k < xs.size(); k += n) out[k] = safe_eval(f, xs[k]);
    });
  }
}

}  // namespace detail

/// Swarm with explicit stepping, used by minimize and by tests that need to
/// observe intermediate states.
template <class Objective>
class Swarm {
 public:
  Swarm(Objective objective, Bounds bounds, PsoConfig cfg)
      : f_(std::move(objective)), bounds_(std::move(bounds)), cfg_(cfg), rng_(cfg.seed) {
    cfg_.validate();
    bounds_.validate();
    v_max_.resize(bounds_.dim());
    for (std::size_t d = 0; d < bounds_.dim(); ++d) {
      v_max_[d] = cfg_.v_max_fraction * (bounds_.upper[d] - bounds_.lower[d]);
    }
  }

  /// Uniform random initialization; the first seeds.size() particles are
  /// replaced by the given positions (clamped into the box).
  void initialize(std::span<const std::vector<double>> seeds = {}) {
    const std::size_t dim = bounds_.dim();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    s_ = SwarmState{};
    s_.positions.assign(cfg_.n_particles, std::vector<double>(dim));
    s_.velocities.assign(cfg_.n_particles, std::vector<double>(dim));
    for (std::size_t k = 0; k < cfg_.n_particles; ++k) {
      for (std::size_t d = 0; d < dim; ++d) {
        s_.positions[k][d] = bounds_.lower[d] + unit(rng_) * (bounds_.upper[d] - bounds_.lower[d]);
        s_.velocities[k][d] = (2.0 * unit(rng_) - 1.0) * v_max_[d];
      }
    }
    for (std::size_t k = 0; k < std::min(seeds.size(), cfg_.n_particles); ++k) {
      if (seeds[k].size() != dim) throw ConfigError("Swarm: seed particle has wrong dimension");
      s_.positions[k] = seeds[k];
      bounds_.clamp(s_.positions[k]);
    }
    detail::evaluate_all(f_, s_.positions, s_.values, cfg_.workers);
    evaluations_ += cfg_.n_particles;
    s_.p_best = s_.positions;
    s_.p_best_value = s_.values;
    update_global();
    trace_.assign(1, s_.g_best_value);
  }

  void step() {
    const std::size_t dim = bounds_.dim();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t k = 0; k < cfg_.n_particles; ++k) {
      auto& x = s_.positions[k];
      auto& v = s_.velocities[k];
      for (std::size_t d = 0; d < dim; ++d) {
        const double r1 = unit(rng_);
        const double r2 = unit(rng_);
        double vel = cfg_.w * v[d] + cfg_.c1 * r1 * (s_.p_best[k][d] - x[d]) +
                     cfg_.c2 * r2 * (s_.g_best[d] - x[d]);
        vel = std::clamp(vel, -v_max_[d], v_max_[d]);
        double pos = x[d] + vel;
        if (pos < bounds_.lower[d] || pos > bounds_.upper[d]) {
          pos = std::clamp(pos, bounds_.lower[d], bounds_.upper[d]);
          vel = 0.0;
        }
        x[d] = pos;
        v[d] = vel;
      }
    }
    detail::evaluate_all(f_, s_.positions, s_.values, cfg_.workers);
    evaluations_ += cfg_.n_particles;
    for (std::size_t k = 0; k < cfg_.n_particles; ++k) {
      if (s_.values[k] < s_.p_best_value[k]) {
        s_.p_best_value[k] = s_.values[k];
        s_.p_best[k] = s_.positions[k];
      }
    }
    update_global();
    ++s_.iteration;
    trace_.push_back(s_.g_best_value);
  }

  const SwarmState& state() const noexcept { return s_; }
  const std::vector<double>& trace() const noexcept { return trace_; }
  std::size_t evaluations() const noexcept { return evaluations_; }

 private:
  void update_global() {
    for (std::size_t k = 0; k < s_.p_best_value.size(); ++k) {
      if (s_.g_best.empty() || s_.p_best_value[k] < s_.g_best_value) {
        s_.g_best_value = s_.p_best_value[k];
        s_.g_best = s_.p_best[k];
      }
    }
  }

  Objective f_;
  Bounds bounds_;
  PsoConfig cfg_;
  std::mt19937_64 rng_;
  std::vector<double> v_max_;
  SwarmState s_;
  std::vector<double> trace_;
  std::size_t evaluations_ = 0;
};

/// Minimizes `objective` (callable as double(std::span<const double>)) over
/// the box. `seeds` are injected as initial particles.
template <class Objective>
PsoResult minimize(Objective&& objective, const Bounds& bounds, const PsoConfig& cfg,
                   std::span<const std::vector<double>> seeds = {}) {
  auto ref = [&objective](std::span<const double> x) { return objective(x); };
  Swarm<decltype(ref)> swarm(ref, bounds, cfg);
  swarm.initialize(seeds);
  for (std::size_t it = 0; it < cfg.n_iterations; ++it) {
    swarm.step();
    const auto& tr = swarm.trace();
    if (cfg.early_stop_window > 0 && tr.size() > cfg.early_stop_window) {
      const double before = tr[tr.size() - 1 - cfg.early_stop_window];
      if (before - tr.back() < cfg.early_stop_tol) break;
    }
  }
  PsoResult r;
  r.x_best = swarm.state().g_best;
  r.f_best = swarm.state().g_best_value;
  r.trace = swarm.trace();
  r.evaluations = swarm.evaluations();
  return r;
}

}  // namespace pvdt
