#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "pvdt/telemetry.hpp"

using namespace pvdt;

namespace {

Telemetry parse(const std::string& text) {
  std::istringstream in(text);
  return parse_telemetry(in, "t.csv");
}

std::vector<Measurement> at_times(const std::vector<double>& ts) {
  std::vector<Measurement> out;
  for (double t : ts) out.push_back(make_measurement(t, 30, 5, 25));
  return out;
}

// Straightforward reference: walk the boundaries and pick the first sample
// at or after each one that lies before the next.
std::vector<double> reference_resample(const std::vector<double>& ts, double step) {
  std::vector<double> out;
  if (ts.empty()) return out;
  for (double b = ts.front(); b <= ts.back(); b += step) {
    for (double t : ts) {
      if (t >= b - 1e-9 && t < b + step - 1e-9) {
        out.push_back(t);
        break;
      }
    }
  }
  return out;
}

}  // namespace

TEST(ParseTelemetry, WellFormedFile) {
  const auto t = parse("ts,v_pv,i_pv,t_c,g_meas,p_pv\n0,30,5,25,800,150\n1,31,5,25,810,155\n"
                       "2,32,5,26,820,160\n");
  ASSERT_EQ(t.samples.size(), 3u);
  EXPECT_EQ(t.samples[1].v_meas, 31.0);
  EXPECT_EQ(t.samples[2].g_meas, 820.0);
  EXPECT_TRUE(t.has_g_meas);
  EXPECT_TRUE(t.gaps.empty());
}

TEST(ParseTelemetry, NegativeVoltageNamesLine) {
  try {
    parse("ts,v_pv,i_pv,t_c\n0,30,5,25\n1,-3,5,25\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(ParseTelemetry, PowerFallsBackToProduct) {
  const auto t = parse("ts,v_pv,i_pv,t_c\n0,30,5,25\n");
  EXPECT_EQ(t.samples[0].p_meas, 150.0);
  EXPECT_FALSE(t.samples[0].g_meas);
  EXPECT_FALSE(t.has_p_meas);
}

TEST(ParseTelemetry, ColumnOrderAndWhitespace) {
  const auto t = parse("t_c, i_pv ,ts,v_pv\n25, 5 ,10,30\n24,4,0,29\n");
  ASSERT_EQ(t.samples.size(), 2u);
  EXPECT_EQ(t.samples[0].ts, 0.0);
  EXPECT_EQ(t.samples[1].i_meas, 5.0);
}

TEST(ParseTelemetry, IsoTimestamps) {
  const auto t = parse("ts,v_pv,i_pv,t_c\n2022-11-08T10:00:00Z,30,5,25\n"
                       "2022-11-08T12:00:01.5+02:00,30,5,25\n");
  EXPECT_EQ(t.samples[0].ts, 1667901600.0);
  EXPECT_EQ(t.samples[1].ts, 1667901601.5);
}

TEST(ParseTelemetry, Errors) {
  EXPECT_THROW(parse(""), SchemaError);
  EXPECT_THROW(parse("ts,v_pv,t_c\n0,1,2\n"), SchemaError);
  EXPECT_THROW(parse("ts,v_pv,i_pv,t_c\n0,1,2\n"), ParseError);
  EXPECT_THROW(parse("ts,v_pv,i_pv,t_c\n0,x,2,3\n"), ParseError);
  EXPECT_THROW(parse("ts,v_pv,i_pv,t_c\nyesterday,1,2,3\n"), ParseError);
  EXPECT_THROW(parse("ts,v_pv,i_pv,t_c\n0,1,2,3\n0,1,2,3\n"), ParseError);
  EXPECT_THROW(parse("ts,v_pv,i_pv,t_c,g_meas\n0,1,2,3,1600\n"), ParseError);
  EXPECT_THROW(parse("ts,v_pv,i_pv,t_c,p_pv\n0,10,2,3,30\n"), ParseError);
  EXPECT_THROW(load_telemetry("/nonexistent/t.csv"), IoError);
}

TEST(ParseTelemetry, SortsAndReportsGaps) {
  const auto t = parse("ts,v_pv,i_pv,t_c\n2,1,1,1\n0,1,1,1\n1,1,1,1\n3,1,1,1\n9,1,1,1\n10,1,1,1\n");
  ASSERT_EQ(t.samples.size(), 6u);
  EXPECT_EQ(t.samples[0].ts, 0.0);
  ASSERT_EQ(t.gaps.size(), 1u);
  EXPECT_EQ(t.gaps[0].from_ts, 3.0);
  EXPECT_EQ(t.gaps[0].to_ts, 9.0);
}

TEST(Resample, DecimatesOneHertzStream) {
  std::vector<double> ts;
  for (int k = 0; k < 30; ++k) ts.push_back(k);
  const auto r = resample(at_times(ts), 10.0);
  ASSERT_EQ(r.samples.size(), 3u);
  EXPECT_EQ(r.samples[0].ts, 0.0);
  EXPECT_EQ(r.samples[1].ts, 10.0);
  EXPECT_EQ(r.samples[2].ts, 20.0);
  EXPECT_EQ(r.dropped, 27u);
}

TEST(Resample, IdentityAtSameResolution) {
  const auto in = at_times({100, 110, 120, 130});
  const auto r = resample(in, 10.0);
  EXPECT_EQ(r.samples, in);
  EXPECT_EQ(r.dropped, 0u);
}

TEST(Resample, IrregularTimestampsMatchReference) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dt(0.2, 4.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> ts{1000.0};
    while (ts.size() < 400) ts.push_back(ts.back() + dt(rng) * (trial % 4 == 0 ? 5 : 1));
    const auto r = resample(at_times(ts), 10.0);
    std::vector<double> got;
    for (const auto& m : r.samples) got.push_back(m.ts);
    EXPECT_EQ(got, reference_resample(ts, 10.0)) << trial;
  }
}

TEST(Resample, RejectsBadStep) {
  EXPECT_THROW(resample(at_times({0}), 0.0), ConfigError);
  EXPECT_TRUE(resample({}, 10.0).samples.empty());
}
