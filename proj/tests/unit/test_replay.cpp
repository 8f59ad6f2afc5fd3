#include <gtest/gtest.h>

#include <algorithm>

#include "pvdt/replay.hpp"

using namespace pvdt;

namespace {

const PlantConstants kPlant{};

std::vector<Measurement> stream(double duration, SensorModel sensor = SensorModel::aligned,
                                ParamDrift drift = {}) {
  SynthOptions o;
  o.duration_s = duration;
  o.noise = 0.0;
  o.seed = 21;
  o.sensor = sensor;
  o.drift = drift;
  return synth_plant(kDatasheetParams, kPlant, o).telemetry;
}

std::size_t flagged(const ReplayResult& r) {
  return static_cast<std::size_t>(
      std::count_if(r.records.begin(), r.records.end(), [](const auto& x) { return x.updated; }));
}

}  // namespace

TEST(Replay, FixedPointNeedsNoUpdates) {
  RunConfig cfg;
  const auto r = replay(cfg, stream(1800));
  EXPECT_EQ(r.records.size(), 180u);
  EXPECT_EQ(r.dropped, 1620u);
  EXPECT_TRUE(r.events.empty());
  ASSERT_TRUE(r.report);
  EXPECT_LT(r.report->i.mape, 0.01);
  EXPECT_LT(r.report->v.mape, 0.01);
  EXPECT_LT(r.report->p.mape, 0.01);
}

TEST(Replay, MidRunStepGivesOneShortBurst) {
  ParamDrift drift;
  drift.step_at_s = 900.0;
  drift.step_params = kDatasheetParams;
  drift.step_params.rs += 0.3;
  RunConfig cfg;
  const auto s = stream(1800, SensorModel::aligned, drift);
  const auto r = replay(cfg, s);
  ASSERT_FALSE(r.events.empty());
  ASSERT_LE(r.events.size(), 3u);
  const double t_step = s.front().ts + 900.0;
  for (const auto& e : r.events) {
    EXPECT_GE(e.ts, t_step);
    EXPECT_LE(e.ts, t_step + 30.0);
    EXPECT_GT(e.tri_pct, 0.0);
  }
  EXPECT_NEAR(r.events.back().new_params.rs, drift.step_params.rs, 0.05);
}

TEST(Replay, UpdateAccounting) {
  RunConfig cfg;
  cfg.policy = UpdatePolicy::fixed(60);
  ParamDrift drift;
  drift.rs_delta = 0.1;
  const auto r = replay(cfg, stream(1800, SensorModel::aligned, drift));
  EXPECT_EQ(r.events.size(), flagged(r));
  EXPECT_EQ(r.events.size(), 29u);  // every 6th step after the first
  for (std::size_t k = 1; k < r.events.size(); ++k) {
    EXPECT_EQ(r.events[k].prev_params.to_array(), r.events[k - 1].new_params.to_array());
  }
}

TEST(Replay, PredictionUsesPreUpdateParameters) {
  RunConfig cfg;
  cfg.policy = UpdatePolicy::fixed(10);
  cfg.warm_start.rs = 0.5;
  const auto r = replay(cfg, stream(300));
  ASSERT_EQ(r.events.size(), 29u);  // every step but the first
  EXPECT_FALSE(r.records[0].updated);
  for (std::size_t k = 1; k < r.records.size(); ++k) {
    EXPECT_EQ(r.records[k].params.to_array(), r.events[k - 1].prev_params.to_array());
  }
}

TEST(Replay, WorksWithoutPyranometer) {
  const auto s = stream(600, SensorModel::absent);
  RunConfig cfg;
  cfg.method = Method::method1;
  EXPECT_TRUE(replay(cfg, s).report);
  cfg.method = Method::proposed;
  EXPECT_TRUE(replay(cfg, s).report);
  cfg.method = Method::base;
  EXPECT_THROW(replay(cfg, s), ConfigError);
  cfg.method = Method::method2;
  EXPECT_THROW(replay(cfg, s), ConfigError);
}

TEST(Replay, Method2RefitsEveryDaylightStep) {
  RunConfig cfg;
  cfg.method = Method::method2;
  const auto r = replay(cfg, stream(300));
  EXPECT_EQ(r.events.size(), r.daylight);
  EXPECT_EQ(flagged(r), r.daylight);
  for (const auto& e : r.events) EXPECT_EQ(e.tier_used, 2);
}

TEST(Replay, BaseUsesPyranometerAndNeverUpdates) {
  RunConfig cfg;
  cfg.method = Method::base;
  const auto s = stream(300);
  const auto r = replay(cfg, s);
  EXPECT_TRUE(r.events.empty());
  EXPECT_EQ(r.records[3].g_used, *r.records[3].meas.g_meas);
  EXPECT_FALSE(r.records[3].g_equiv);
}

TEST(Replay, DarkStepsAreRecordedButNotGraded) {
  auto s = stream(300);
  for (std::size_t k = 100; k < 150; ++k) s[k].v_meas = s[k].i_meas = s[k].p_meas = 0.0;
  const auto r = replay(RunConfig{}, s);
  EXPECT_EQ(r.records.size(), 30u);
  EXPECT_EQ(r.daylight, 25u);
  EXPECT_EQ(r.report->samples, 25u);
  EXPECT_TRUE(r.records[10].dark);
}

TEST(Replay, Window) {
  const auto s = stream(600);
  RunConfig cfg;
  cfg.start_ts = s[100].ts;
  cfg.end_ts = s[300].ts;
  const auto r = replay(cfg, s);
  ASSERT_EQ(r.records.size(), 20u);
  EXPECT_EQ(r.records.front().meas.ts, s[100].ts);
  cfg.end_ts = s[50].ts;
  EXPECT_THROW(replay(cfg, s), ConfigError);
}

TEST(Replay, AllDarkHasNoReport) {
  std::vector<Measurement> night;
  for (int k = 0; k < 50; ++k) night.push_back(make_measurement(k * 10.0, 0, 0, 5, 0.0));
  const auto r = replay(RunConfig{}, night);
  EXPECT_FALSE(r.report);
  EXPECT_EQ(r.daylight, 0u);
}

TEST(Replay, Deterministic) {
  ParamDrift drift;
  drift.rs_delta = 0.1;
  const auto s = stream(900, SensorModel::aligned, drift);
  RunConfig cfg;
  cfg.policy = UpdatePolicy::fixed(30);
  const auto a = replay(cfg, s);
  const auto b = replay(cfg, s);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    EXPECT_EQ(a.records[k].params.to_array(), b.records[k].params.to_array());
    EXPECT_EQ(a.records[k].g_used, b.records[k].g_used);
  }
}
