#pragma once

// Replay outputs: records and events CSV, summary JSON, plot-data CSVs and
// the sweep / comparison tables.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pvdt/errors.hpp"
#include "pvdt/replay.hpp"

namespace pvdt {

using json = nlohmann::json;

/// Shortest text that parses back to the same double; empty for NaN.
inline std::string fmt(double x) {
  if (std::isnan(x)) return "";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

inline std::string fmt(const std::optional<double>& x) { return x ? fmt(*x) : std::string(); }

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline void params_cells(std::ostream& os, const PvParams& p) {
  const auto a = p.to_array();
  for (std::size_t k = 0; k < a.size(); ++k) os << (k ? "," : "") << fmt(a[k]);
}

inline std::string params_header(const char* prefix) {
  std::string h;
  for (std::size_t k = 0; k < PvParams::size; ++k) {
    h += (k ? "," : "");
    h += prefix;
    h += PvParams::names[k];
  }
  return h;
}

inline json channel_json(const std::optional<ErrorReport>& r, const ChannelErrors ErrorReport::*ch) {
  if (!r) return json{{"mean", nullptr}, {"min", nullptr}, {"max", nullptr}};
  const auto& c = (*r).*ch;
  return json{{"mean", c.mape}, {"min", c.min_ape}, {"max", c.max_ape}};
}

}  // namespace detail

inline void write_records_csv(std::ostream& os, std::span<const ReplayRecord> records) {
  os << "ts,v_meas,i_meas,t_meas,g_meas,p_meas,dark,g_equiv,g_used,"
     << detail::params_header("") << ",v_pred,i_pred,p_pred,err_i,err_v,updated\n";
  for (const auto& r : records) {
    const auto& m = r.meas;
    os << fmt(m.ts) << ',' << fmt(m.v_meas) << ',' << fmt(m.i_meas) << ',' << fmt(m.t_meas) << ','
       << fmt(m.g_meas) << ',' << fmt(m.p_meas) << ',' << (r.dark ? 1 : 0) << ','
       << fmt(r.g_equiv) << ',';
    if (!r.dark) os << fmt(r.g_used);
    os << ',';
    detail::params_cells(os, r.params);
    if (r.dark) {
      os << ",,,,,," << 0 << '\n';
      continue;
    }
    os << ',' << fmt(r.predicted.v) << ',' << fmt(r.predicted.i) << ',' << fmt(r.predicted.p)
       << ',' << fmt(r.errors.i) << ',' << fmt(r.errors.v) << ',' << (r.updated ? 1 : 0) << '\n';
  }
}

inline void write_events_csv(std::ostream& os, std::span<const UpdateEvent> events) {
  os << "ts,trigger_error_i,trigger_error_v,tier_used,g_equiv,tri_pct,"
     << detail::params_header("prev_") << ',' << detail::params_header("new_") << '\n';
  for (const auto& e : events) {
    os << fmt(e.ts) << ',' << fmt(e.trigger_error_i) << ',' << fmt(e.trigger_error_v) << ','
       << e.tier_used << ',' << fmt(e.g_equiv) << ',' << fmt(e.tri_pct) << ',';
    detail::params_cells(os, e.prev_params);
    os << ',';
    detail::params_cells(os, e.new_params);
    os << '\n';
  }
}

/// Summary mirroring the method-comparison and update-strategy tables.
/// Metrics are null when no daylight sample was graded.
inline json summary_json(const ReplayResult& r) {
  std::size_t tier2 = 0;
  double tri_max = 0.0;
  bool any_tri = false;
  for (const auto& e : r.events) {
    tier2 += e.tier_used == 2;
    if (!std::isnan(e.tri_pct)) {
      tri_max = any_tri ? std::max(tri_max, e.tri_pct) : e.tri_pct;
      any_tri = true;
    }
  }
  json j;
  j["method"] = to_string(r.method);
  j["policy"] = r.method == Method::proposed ? json(r.policy.label()) : json(nullptr);
  j["samples"] = r.records.size();
  j["daylight"] = r.daylight;
  j["graded"] = r.report ? r.report->samples : 0;
  j["dropped"] = r.dropped;
  j["updates"] = r.events.size();
  j["tier2_updates"] = tier2;
  j["tri_max_pct"] = any_tri ? json(tri_max) : json(nullptr);
  j["mape_pct"] = {{"i", detail::channel_json(r.report, &ErrorReport::i)},
                   {"v", detail::channel_json(r.report, &ErrorReport::v)},
                   {"p", detail::channel_json(r.report, &ErrorReport::p)}};
  if (r.report) {
    j["rmse"] = {{"i", r.report->i.rmse}, {"v", r.report->v.rmse}, {"p", r.report->p.rmse}};
  } else {
    j["rmse"] = {{"i", nullptr}, {"v", nullptr}, {"p", nullptr}};
  }
  return j;
}

/// Throws SchemaError naming the first field that breaks the summary shape.
inline void validate_summary(const json& j) {
  auto fail = [](const std::string& what) { throw SchemaError("summary: " + what); };
  if (!j.is_object()) fail("not an object");
  if (!j.contains("method") || !j["method"].is_string()) fail("'method' must be a string");
  try {
    parse_method(j["method"].get<std::string>());
  } catch (const ConfigError&) {
    fail("unknown method '" + j["method"].get<std::string>() + "'");
  }
  if (!j.contains("policy") || !(j["policy"].is_string() || j["policy"].is_null())) {
    fail("'policy' must be a string or null");
  }
  for (const char* k : {"samples", "daylight", "graded", "dropped", "updates", "tier2_updates"}) {
    if (!j.contains(k) || !j[k].is_number_unsigned()) fail(std::string("'") + k + "' must be a count");
  }
  if (!j.contains("tri_max_pct") || !(j["tri_max_pct"].is_number() || j["tri_max_pct"].is_null())) {
    fail("'tri_max_pct' must be a number or null");
  }
  const bool empty = j["graded"].get<std::size_t>() == 0;
  auto metric = [&](const json& v, const std::string& name) {
    if (empty ? !v.is_null() : !(v.is_number() && v.get<double>() >= 0.0)) {
      fail("'" + name + (empty ? "' must be null" : "' must be a nonnegative number"));
    }
  };
  if (!j.contains("mape_pct") || !j["mape_pct"].is_object()) fail("'mape_pct' missing");
  if (!j.contains("rmse") || !j["rmse"].is_object()) fail("'rmse' missing");
  for (const char* ch : {"i", "v", "p"}) {
    const auto& m = j["mape_pct"];
    if (!m.contains(ch) || !m[ch].is_object()) fail(std::string("'mape_pct.") + ch + "' missing");
    for (const char* s : {"mean", "min", "max"}) {
      if (!m[ch].contains(s)) fail(std::string("'mape_pct.") + ch + "." + s + "' missing");
      metric(m[ch][s], std::string("mape_pct.") + ch + "." + s);
    }
    if (!empty) {
      const double lo = m[ch]["min"], mean = m[ch]["mean"], hi = m[ch]["max"];
      if (!(lo <= mean && mean <= hi)) fail(std::string("'mape_pct.") + ch + "' needs min <= mean <= max");
    }
    if (!j["rmse"].contains(ch)) fail(std::string("'rmse.") + ch + "' missing");
    metric(j["rmse"][ch], std::string("rmse.") + ch);
  }
}

/// Per-step series for time-series plots.
inline void write_timeseries_csv(std::ostream& os, std::span<const ReplayRecord> records) {
  os << "ts,g_used,v_meas,v_pred,i_meas,i_pred,p_meas,p_pred\n";
  for (const auto& r : records) {
    if (r.dark) continue;
    os << fmt(r.meas.ts) << ',' << fmt(r.g_used) << ',' << fmt(r.meas.v_meas) << ','
       << fmt(r.predicted.v) << ',' << fmt(r.meas.i_meas) << ',' << fmt(r.predicted.i) << ','
       << fmt(r.meas.p_meas) << ',' << fmt(r.predicted.p) << '\n';
  }
}

/// Parameters in force at every daylight step.
inline void write_params_csv(std::ostream& os, std::span<const ReplayRecord> records) {
  os << "ts," << detail::params_header("") << ",updated\n";
  for (const auto& r : records) {
    if (r.dark) continue;
    os << fmt(r.meas.ts) << ',';
    detail::params_cells(os, r.params);
    os << ',' << (r.updated ? 1 : 0) << '\n';
  }
}

/// Quantiles of each parameter over the daylight steps, for box plots.
inline void write_param_distribution_csv(std::ostream& os, std::span<const ReplayRecord> records) {
  os << "param,n,min,q25,median,q75,max,mean\n";
  for (std::size_t k = 0; k < PvParams::size; ++k) {
    std::vector<double> xs;
    for (const auto& r : records) {
      if (!r.dark) xs.push_back(r.params[k]);
    }
    os << PvParams::names[k] << ',' << xs.size();
    if (xs.empty()) {
      os << ",,,,,,\n";
      continue;
    }
    std::sort(xs.begin(), xs.end());
    // Linear interpolation between order statistics.
    auto q = [&](double f) {
      const double pos = f * static_cast<double>(xs.size() - 1);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const auto hi = std::min(lo + 1, xs.size() - 1);
      return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
    };
    double sum = 0.0;
    for (double x : xs) sum += x;
    os << ',' << fmt(xs.front()) << ',' << fmt(q(0.25)) << ',' << fmt(q(0.5)) << ','
       << fmt(q(0.75)) << ',' << fmt(xs.back()) << ',' << fmt(sum / static_cast<double>(xs.size()))
       << '\n';
  }
}

/// One row per replay: the comparison and sweep tables share this layout.
inline void write_summary_table_csv(std::ostream& os, std::span<const ReplayResult> runs) {
  os << "method,policy,updates,graded,mape_i,mape_v,mape_p,min_ape_i,max_ape_i,rmse_i,rmse_v,"
        "rmse_p\n";
  for (const auto& r : runs) {
    os << to_string(r.method) << ',' << (r.method == Method::proposed ? r.policy.label() : "")
       << ',' << r.events.size() << ',' << (r.report ? r.report->samples : 0);
    if (!r.report) {
      os << ",,,,,,,,\n";
      continue;
    }
    const auto& e = *r.report;
    os << ',' << fmt(e.i.mape) << ',' << fmt(e.v.mape) << ',' << fmt(e.p.mape) << ','
       << fmt(e.i.min_ape) << ',' << fmt(e.i.max_ape) << ',' << fmt(e.i.rmse) << ','
       << fmt(e.v.rmse) << ',' << fmt(e.p.rmse) << '\n';
  }
}

/// Writes every output of one replay into `dir`.
inline void emit_replay(const ReplayResult& r, const std::filesystem::path& dir) {
  auto write = [&](const char* name, auto&& body) {
    const auto path = dir / name;
    auto out = detail::open_out(path);
    body(out);
    detail::finish(out, path);
  };
  write("records.csv", [&](std::ostream& os) { write_records_csv(os, r.records); });
  write("events.csv", [&](std::ostream& os) { write_events_csv(os, r.events); });
  write("summary.json", [&](std::ostream& os) { os << summary_json(r).dump(2) << '\n'; });
  write("plot_timeseries.csv", [&](std::ostream& os) { write_timeseries_csv(os, r.records); });
  write("plot_params.csv", [&](std::ostream& os) { write_params_csv(os, r.records); });
  write("plot_param_distribution.csv",
        [&](std::ostream& os) { write_param_distribution_csv(os, r.records); });
}

inline void emit_table(std::span<const ReplayResult> runs, const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  write_summary_table_csv(out, runs);
  json arr = json::array();
  for (const auto& r : runs) arr.push_back(summary_json(r));
  detail::finish(out, path);
  auto json_path = path;
  json_path.replace_extension(".json");
  auto jout = detail::open_out(json_path);
  jout << arr.dump(2) << '\n';
  detail::finish(jout, json_path);
}

}  // namespace pvdt
