#pragma once

#include "pvdt/config.hpp"
#include "pvdt/datasheet_fit.hpp"
#include "pvdt/errors.hpp"
#include "pvdt/irradiance.hpp"
#include "pvdt/lambert_w.hpp"
#include "pvdt/measurement.hpp"
#include "pvdt/metrics.hpp"
#include "pvdt/pso.hpp"
#include "pvdt/replay.hpp"
#include "pvdt/report.hpp"
#include "pvdt/scheduler.hpp"
#include "pvdt/sd_model.hpp"
#include "pvdt/synth.hpp"
#include "pvdt/telemetry.hpp"
#include "pvdt/two_stage.hpp"
