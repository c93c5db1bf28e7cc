#pragma once

// Umbrella header: joint VaR/ES estimation and forecasting with realized
// measures, plus the simulation and evaluation tooling around it.

#include "tailrisk/csv.hpp"
#include "tailrisk/dates.hpp"
#include "tailrisk/errors.hpp"
#include "tailrisk/estimate.hpp"
#include "tailrisk/eval.hpp"
#include "tailrisk/harness.hpp"
#include "tailrisk/market_data.hpp"
#include "tailrisk/mcs.hpp"
#include "tailrisk/model.hpp"
#include "tailrisk/realized.hpp"
#include "tailrisk/report_io.hpp"
#include "tailrisk/sim.hpp"
#include "tailrisk/stats.hpp"
#include "tailrisk/toml.hpp"
