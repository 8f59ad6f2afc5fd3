#pragma once

// Telemetry CSV ingestion and decimation.
//
// Schema: header naming at least ts, v_pv, i_pv, t_c; g_meas and p_pv are
// optional. Columns may appear in any order. ts is Unix seconds or an
// ISO-8601 timestamp (YYYY-MM-DD[T ]hh:mm:ss[.fff][Z|+hh:mm|-hh:mm]).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pvdt/errors.hpp"
#include "pvdt/measurement.hpp"

namespace pvdt {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                          : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(x)) return std::nullopt;
  return x;
}

// Days since 1970-01-01 of a proleptic Gregorian date.
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) noexcept {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline std::optional<double> parse_iso8601(std::string_view s) {
  auto digits = [&](std::size_t pos, std::size_t n) -> std::optional<int> {
    if (pos + n > s.size()) return std::nullopt;
    int v = 0;
    for (std::size_t k = pos; k < pos + n; ++k) {
      if (s[k] < '0' || s[k] > '9') return std::nullopt;
      v = v * 10 + (s[k] - '0');
    }
    return v;
  };
  if (s.size() < 19 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') ||
      s[13] != ':' || s[16] != ':') {
    return std::nullopt;
  }
  const auto y = digits(0, 4), mo = digits(5, 2), d = digits(8, 2);
  const auto h = digits(11, 2), mi = digits(14, 2), se = digits(17, 2);
  if (!y || !mo || !d || !h || !mi || !se || *mo < 1 || *mo > 12 || *d < 1 || *d > 31 ||
      *h > 23 || *mi > 59 || *se > 60) {
    return std::nullopt;
  }
  double frac = 0.0;
  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    const std::size_t start = pos;
    ++pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    if (pos == start + 1) return std::nullopt;
    frac = *parse_double(std::string("0") + std::string(s.substr(start, pos - start)));
  }
  int offset_s = 0;
  if (pos < s.size()) {
    if (s[pos] == 'Z' && pos + 1 == s.size()) {
      ++pos;
    } else if ((s[pos] == '+' || s[pos] == '-') && pos + 6 == s.size() && s[pos + 3] == ':') {
      const auto oh = digits(pos + 1, 2), om = digits(pos + 4, 2);
      if (!oh || !om) return std::nullopt;
      offset_s = (s[pos] == '+' ? 1 : -1) * (*oh * 3600 + *om * 60);
      pos += 6;
    } else {
      return std::nullopt;
    }
  }
  const auto days = days_from_civil(*y, static_cast<unsigned>(*mo), static_cast<unsigned>(*d));
  return static_cast<double>(days * 86400 + *h * 3600 + *mi * 60 + *se - offset_s) + frac;
}

}  // namespace detail

/// Unix seconds, or ISO-8601 converted to Unix seconds.
inline std::optional<double> parse_timestamp(std::string_view text) {
  text = detail::trim(text);
  if (auto x = detail::parse_double(text)) return x;
  return detail::parse_iso8601(text);
}

struct TelemetryGap {
  double from_ts = 0.0;
  double to_ts = 0.0;
};

struct Telemetry {
  std::vector<Measurement> samples;
  std::vector<TelemetryGap> gaps;
  bool has_g_meas = false;
  bool has_p_meas = false;
};

/// Parses telemetry CSV text. Rows that break a measurement invariant raise
/// ParseError naming the line; gaps are reported, not filled.
inline Telemetry parse_telemetry(std::istream& in, const std::string& source = "telemetry") {
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t, std::less<>> col;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) break;
  }
  if (line_no == 0 || detail::trim(line).empty()) throw SchemaError(source + ": empty file");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
  const auto header = detail::split_csv(line);
  for (std::size_t k = 0; k < header.size(); ++k) col.emplace(std::string(header[k]), k);
  for (const char* required : {"ts", "v_pv", "i_pv", "t_c"}) {
    if (!col.contains(required)) {
      throw SchemaError(source + ": missing required column '" + required + "'");
    }
  }
  Telemetry out;
  out.has_g_meas = col.contains("g_meas");
  out.has_p_meas = col.contains("p_pv");

  auto field = [&](const std::vector<std::string_view>& f, std::string_view name) {
    const auto k = col.find(name)->second;
    const auto x = detail::parse_double(f[k]);
    if (!x) throw ParseError(source + ": bad value in column '" + std::string(name) + "'", line_no);
    return *x;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != header.size()) {
      throw ParseError(source + ": expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(f.size()),
                       line_no);
    }
    Measurement m;
    const auto ts = parse_timestamp(f[col.find("ts")->second]);
    if (!ts) throw ParseError(source + ": unparseable timestamp", line_no);
    m.ts = *ts;
    m.v_meas = field(f, "v_pv");
    m.i_meas = field(f, "i_pv");
    m.t_meas = field(f, "t_c");
    if (m.v_meas < 0.0) throw ParseError(source + ": negative voltage", line_no);
    if (m.i_meas < 0.0) throw ParseError(source + ": negative current", line_no);
    if (out.has_g_meas) {
      const double g = field(f, "g_meas");
      if (g < 0.0 || g > 1500.0) throw ParseError(source + ": g_meas outside [0, 1500]", line_no);
      m.g_meas = g;
    }
    m.p_meas = m.v_meas * m.i_meas;
    if (out.has_p_meas) {
      const double p = field(f, "p_pv");
      if (std::fabs(p - m.p_meas) > 0.005 * std::max(std::fabs(m.p_meas), 1.0)) {
        throw ParseError(source + ": p_pv differs from v_pv*i_pv by more than 0.5%", line_no);
      }
      m.p_meas = p;
    }
    out.samples.push_back(m);
  }

  std::stable_sort(out.samples.begin(), out.samples.end(),
                   [](const Measurement& a, const Measurement& b) { return a.ts < b.ts; });
  for (std::size_t k = 1; k < out.samples.size(); ++k) {
    if (out.samples[k].ts == out.samples[k - 1].ts) {
      throw ParseError(source + ": duplicate timestamp " + std::to_string(out.samples[k].ts), 0);
    }
  }
  if (out.samples.size() >= 3) {
    std::vector<double> dt;
    for (std::size_t k = 1; k < out.samples.size(); ++k) {
      dt.push_back(out.samples[k].ts - out.samples[k - 1].ts);
    }
    auto mid = dt.begin() + static_cast<std::ptrdiff_t>(dt.size() / 2);
    std::nth_element(dt.begin(), mid, dt.end());
    const double typical = *mid;
    for (std::size_t k = 1; k < out.samples.size(); ++k) {
      if (out.samples[k].ts - out.samples[k - 1].ts > 1.5 * typical) {
        out.gaps.push_back({out.samples[k - 1].ts, out.samples[k].ts});
      }
    }
  }
  return out;
}

inline Telemetry load_telemetry(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open telemetry file '" + path + "'");
  return parse_telemetry(in, path);
}

struct Resampled {
  std::vector<Measurement> samples;
  std::size_t dropped = 0;
};

/// Decimation onto the grid t0 + k*step, t0 being the first timestamp: for
/// each boundary the first sample at or after it and before the next
/// boundary is kept. Boundaries with no such sample are skipped.
inline Resampled resample(std::span<const Measurement> stream, double step_s) {
  if (!(step_s > 0.0)) throw ConfigError("resample: step must be positive");
  Resampled out;
  if (stream.empty()) return out;
  const double t0 = stream.front().ts;
  long long last_slot = -1;
  for (const auto& m : stream) {
    // Small slack so that timestamps like t0 + 10 - 1e-9 count for slot 1.
    const auto slot = static_cast<long long>(std::floor((m.ts - t0) / step_s + 1e-9));
    if (slot > last_slot) {
      out.samples.push_back(m);
      last_slot = slot;
    }
  }
  out.dropped = stream.size() - out.samples.size();
  return out;
}

}  // namespace pvdt
