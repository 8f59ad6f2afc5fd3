#pragma once

// File formats around the replay: run config JSON, parameter JSON, bounds and
// datasheet CSV, and the synthetic telemetry / ground-truth writers.

#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pvdt/datasheet_fit.hpp"
#include "pvdt/errors.hpp"
#include "pvdt/replay.hpp"
#include "pvdt/report.hpp"
#include "pvdt/synth.hpp"
#include "pvdt/telemetry.hpp"

namespace pvdt {

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": " + e.what());
  }
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> known,
                           const std::string& where) {
  const std::set<std::string> k(known.begin(), known.end());
  for (const auto& [key, value] : j.items()) {
    if (!k.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
void read_into(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": bad value for '" + key + "'");
  }
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace detail

// ---- parameters -----------------------------------------------------------

inline json params_to_json(const PvParams& p) {
  return json{{"rs", p.rs}, {"rsh", p.rsh}, {"kd", p.kd}, {"iph0", p.iph0}, {"is0", p.is0}};
}

inline PvParams params_from_json(const json& j, const std::string& where = "params") {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  PvParams p;
  for (std::size_t k = 0; k < PvParams::size; ++k) {
    const std::string name(PvParams::names[k]);
    if (!j.contains(name) || !j[name].is_number()) {
      throw ConfigError(where + ": missing numeric '" + name + "'");
    }
  }
  p = PvParams{j["rs"], j["rsh"], j["kd"], j["iph0"], j["is0"]};
  try {
    p.validate();
  } catch (const Error& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return p;
}

/// Accepts a bare parameter object or one nested under "params".
inline PvParams load_params(const std::filesystem::path& path) {
  const auto j = detail::parse_json(detail::read_file(path), path.string());
  return params_from_json(j.contains("params") ? j["params"] : j, path.string());
}

inline void save_params(const std::filesystem::path& path, const PvParams& p,
                        std::optional<double> rmse = std::nullopt) {
  json j = params_to_json(p);
  if (rmse) j["rmse"] = *rmse;
  auto out = detail::open_out(path);
  out << j.dump(2) << '\n';
  detail::finish(out, path);
}

// ---- bounds CSV: name,lower,upper -------------------------------------------

inline ParamBounds parse_bounds(std::istream& in, const std::string& source = "bounds") {
  std::array<std::optional<std::pair<double, double>>, PvParams::size> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 3) throw ParseError(source + ": expected name,lower,upper", line_no);
    const auto lo = detail::parse_double(f[1]);
    const auto hi = detail::parse_double(f[2]);
    if (!lo || !hi) {
      if (f[0] == "name") continue;  // header
      throw ParseError(source + ": bad bound value", line_no);
    }
    std::size_t k = 0;
    while (k < PvParams::size && PvParams::names[k] != f[0]) ++k;
    if (k == PvParams::size) {
      throw ParseError(source + ": unknown parameter '" + std::string(f[0]) + "'", line_no);
    }
    if (rows[k]) throw ParseError(source + ": duplicate row for " + std::string(f[0]), line_no);
    rows[k] = std::pair{*lo, *hi};
  }
  std::array<double, PvParams::size> lo{}, hi{};
  for (std::size_t k = 0; k < PvParams::size; ++k) {
    if (!rows[k]) throw SchemaError(source + ": missing row for " + std::string(PvParams::names[k]));
    lo[k] = rows[k]->first;
    hi[k] = rows[k]->second;
  }
  ParamBounds b{PvParams::from_array(lo), PvParams::from_array(hi)};
  b.validate();
  return b;
}

inline ParamBounds load_bounds(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open bounds file '" + path.string() + "'");
  return parse_bounds(in, path.string());
}

inline void write_bounds_csv(std::ostream& os, const ParamBounds& b) {
  os << "name,lower,upper\n";
  const auto lo = b.lower.to_array();
  const auto hi = b.upper.to_array();
  for (std::size_t k = 0; k < PvParams::size; ++k) {
    os << PvParams::names[k] << ',' << fmt(lo[k]) << ',' << fmt(hi[k]) << '\n';
  }
}

// ---- datasheet CSV: v,i[,g][,t_c] -------------------------------------------

inline std::vector<CurvePoint> parse_datasheet(std::istream& in,
                                               const std::string& source = "datasheet") {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) break;
  }
  const auto header = detail::split_csv(line);
  std::optional<std::size_t> cv, ci, cg, ct;
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == "v") cv = k;
    if (header[k] == "i") ci = k;
    if (header[k] == "g") cg = k;
    if (header[k] == "t_c") ct = k;
  }
  if (!cv || !ci) throw SchemaError(source + ": header needs columns v and i");
  std::vector<CurvePoint> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != header.size()) throw ParseError(source + ": wrong field count", line_no);
    auto num = [&](std::size_t k) {
      const auto x = detail::parse_double(f[k]);
      if (!x) throw ParseError(source + ": bad number", line_no);
      return *x;
    };
    CurvePoint p{num(*cv), num(*ci)};
    if (cg) p.g = num(*cg);
    if (ct) p.t_c = num(*ct);
    if (p.v < 0.0 || p.i < 0.0) throw ParseError(source + ": negative v or i", line_no);
    out.push_back(p);
  }
  return out;
}

inline std::vector<CurvePoint> load_datasheet(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open datasheet file '" + path.string() + "'");
  return parse_datasheet(in, path.string());
}

inline void write_datasheet_csv(std::ostream& os, std::span<const CurvePoint> pts) {
  os << "v,i,g,t_c\n";
  for (const auto& p : pts) os << fmt(p.v) << ',' << fmt(p.i) << ',' << fmt(p.g) << ',' << fmt(p.t_c) << '\n';
}

/// Points along the model I-V curve from short circuit to open circuit.
inline std::vector<CurvePoint> sample_curve(const PvParams& p, const PlantConstants& plant,
                                            const EnvInputs& env, std::size_t n) {
  // Open-circuit voltage by bisection on I(V) = 0.
  double lo = 0.0, hi = 1.0;
  while (current_at_voltage(p, plant, env, hi) > 0.0) hi *= 2.0;
  for (int k = 0; k < 200 && hi - lo > 1e-12 * hi; ++k) {
    const double mid = 0.5 * (lo + hi);
    (current_at_voltage(p, plant, env, mid) > 0.0 ? lo : hi) = mid;
  }
  std::vector<CurvePoint> out;
  for (std::size_t k = 0; k < n; ++k) {
    const double v = lo * static_cast<double>(k) / static_cast<double>(n - 1);
    out.push_back({v, std::max(0.0, current_at_voltage(p, plant, env, v)), env.g, env.t_c});
  }
  return out;
}

// ---- synthetic telemetry ----------------------------------------------------

inline void write_telemetry_csv(std::ostream& os, std::span<const Measurement> samples,
                                bool with_g) {
  os << "ts,v_pv,i_pv,t_c" << (with_g ? ",g_meas" : "") << ",p_pv\n";
  for (const auto& m : samples) {
    os << fmt(m.ts) << ',' << fmt(m.v_meas) << ',' << fmt(m.i_meas) << ',' << fmt(m.t_meas);
    if (with_g) os << ',' << fmt(m.g_meas);
    os << ',' << fmt(m.p_meas) << '\n';
  }
}

inline void write_truth_csv(std::ostream& os, std::span<const TruthRow> rows) {
  os << "ts,g,t_c," << detail::params_header("") << '\n';
  for (const auto& r : rows) {
    os << fmt(r.ts) << ',' << fmt(r.g) << ',' << fmt(r.t_c) << ',';
    detail::params_cells(os, r.params);
    os << '\n';
  }
}

inline void write_clouds_csv(std::ostream& os, const SynthOutput& s) {
  os << "field,start_s,duration_s,depth\n";
  for (const auto& c : s.clouds) {
    os << "plant," << fmt(c.start_s) << ',' << fmt(c.duration_s) << ',' << fmt(c.depth) << '\n';
  }
  for (const auto& c : s.sensor_clouds) {
    os << "sensor," << fmt(c.start_s) << ',' << fmt(c.duration_s) << ',' << fmt(c.depth) << '\n';
  }
}

// ---- run config JSON ----------------------------------------------------------

namespace detail {

inline void read_pso(const json& j, PsoConfig& cfg, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  reject_unknown(j,
                 {"n_particles", "n_iterations", "c1", "c2", "w", "v_max_fraction",
                  "early_stop_window", "early_stop_tol", "workers"},
                 where);
  read_into(j, "n_particles", cfg.n_particles, where);
  read_into(j, "n_iterations", cfg.n_iterations, where);
  read_into(j, "c1", cfg.c1, where);
  read_into(j, "c2", cfg.c2, where);
  read_into(j, "w", cfg.w, where);
  read_into(j, "v_max_fraction", cfg.v_max_fraction, where);
  read_into(j, "early_stop_window", cfg.early_stop_window, where);
  read_into(j, "early_stop_tol", cfg.early_stop_tol, where);
  read_into(j, "workers", cfg.workers, where);
}

inline double read_time(const json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    if (auto t = parse_timestamp(v.get<std::string>())) return *t;
  }
  throw ConfigError(where + ": expected Unix seconds or an ISO-8601 string");
}

}  // namespace detail

/// Run configuration plus where to write results. Relative paths inside the
/// file resolve against the file's directory.
struct RunSetup {
  RunConfig run;
  std::optional<std::filesystem::path> out_dir;
};

inline RunSetup run_config_from_json(const json& j, const std::filesystem::path& base = {},
                                     const std::string& where = "config") {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  detail::reject_unknown(
      j,
      {"plant", "x1_bounds", "x2_bounds", "outer_iterations", "tier_threshold", "convergence_tol",
       "nested", "normalized_f2", "stage1_pso", "stage2_pso", "policy", "method", "resample_s",
       "seed", "dark", "warm_start", "start_ts", "end_ts", "tri_tail_fraction", "tracker_step_v",
       "out_dir"},
      where);
  RunSetup s;
  RunConfig& c = s.run;
  if (j.contains("plant")) {
    const auto& p = j["plant"];
    const auto w = where + ".plant";
    if (!p.is_object()) throw ConfigError(w + ": expected an object");
    detail::reject_unknown(p, {"ns", "alpha_isc", "g_ref", "exact_omega", "t_min", "t_max"}, w);
    detail::read_into(p, "ns", c.plant.ns, w);
    detail::read_into(p, "alpha_isc", c.plant.alpha_isc, w);
    detail::read_into(p, "g_ref", c.plant.g_ref, w);
    detail::read_into(p, "exact_omega", c.plant.exact_omega, w);
    detail::read_into(p, "t_min", c.plant.t_min, w);
    detail::read_into(p, "t_max", c.plant.t_max, w);
  }
  if (j.contains("x1_bounds")) {
    const auto& b = j["x1_bounds"];
    if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number()) {
      throw ConfigError(where + ": x1_bounds must be [lo, hi]");
    }
    c.coopt.x1_bounds = Interval{b[0].get<double>(), b[1].get<double>()};
  }
  if (j.contains("x2_bounds")) {
    const auto& b = j["x2_bounds"];
    if (b.is_string()) {
      c.coopt.x2_bounds = load_bounds(detail::resolve(base, b.get<std::string>()));
    } else if (b.is_object() && b.contains("lower") && b.contains("upper")) {
      c.coopt.x2_bounds = ParamBounds{params_from_json(b["lower"], where + ".x2_bounds.lower"),
                                      params_from_json(b["upper"], where + ".x2_bounds.upper")};
    } else {
      throw ConfigError(where + ": x2_bounds must be a bounds file path or {lower, upper}");
    }
  }
  detail::read_into(j, "outer_iterations", c.coopt.outer_iterations, where);
  detail::read_into(j, "tier_threshold", c.coopt.tier_threshold, where);
  detail::read_into(j, "convergence_tol", c.coopt.convergence_tol, where);
  detail::read_into(j, "nested", c.coopt.nested, where);
  detail::read_into(j, "normalized_f2", c.coopt.normalized_f2, where);
  if (j.contains("stage1_pso")) detail::read_pso(j["stage1_pso"], c.coopt.stage1_cfg, where + ".stage1_pso");
  if (j.contains("stage2_pso")) detail::read_pso(j["stage2_pso"], c.coopt.stage2_cfg, where + ".stage2_pso");
  if (j.contains("policy")) {
    const auto& p = j["policy"];
    if (p.is_string()) {
      c.policy = parse_policy(p.get<std::string>());
    } else if (p.is_number()) {
      c.policy = UpdatePolicy::fixed(p.get<double>());
    } else {
      throw ConfigError(where + ": policy must be a string like \"event:0.005\" or seconds");
    }
  }
  if (j.contains("method")) {
    if (!j["method"].is_string()) throw ConfigError(where + ": method must be a string");
    c.method = parse_method(j["method"].get<std::string>());
  }
  detail::read_into(j, "resample_s", c.resample_s, where);
  detail::read_into(j, "seed", c.seed, where);
  if (j.contains("dark")) {
    const auto& d = j["dark"];
    if (!d.is_object()) throw ConfigError(where + ".dark: expected an object");
    detail::reject_unknown(d, {"v", "i"}, where + ".dark");
    detail::read_into(d, "v", c.coopt.dark.v, where + ".dark");
    detail::read_into(d, "i", c.coopt.dark.i, where + ".dark");
  }
  if (j.contains("warm_start")) {
    const auto& w = j["warm_start"];
    c.warm_start = w.is_string() ? load_params(detail::resolve(base, w.get<std::string>()))
                                 : params_from_json(w, where + ".warm_start");
  }
  if (j.contains("start_ts")) c.start_ts = detail::read_time(j["start_ts"], where + ".start_ts");
  if (j.contains("end_ts")) c.end_ts = detail::read_time(j["end_ts"], where + ".end_ts");
  detail::read_into(j, "tri_tail_fraction", c.tri_tail_fraction, where);
  detail::read_into(j, "tracker_step_v", c.tracker_step_v, where);
  if (j.contains("out_dir")) {
    if (!j["out_dir"].is_string()) throw ConfigError(where + ": out_dir must be a string");
    s.out_dir = detail::resolve(base, j["out_dir"].get<std::string>());
  }
  return s;
}

inline RunSetup load_run_config(const std::filesystem::path& path) {
  const auto j = detail::parse_json(detail::read_file(path), path.string());
  return run_config_from_json(j, path.parent_path(), path.string());
}

}  // namespace pvdt
