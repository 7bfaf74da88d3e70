#pragma once

#include "redsched/auxiliary.hpp"
#include "redsched/bounds.hpp"
#include "redsched/config.hpp"
#include "redsched/distributions.hpp"
#include "redsched/errors.hpp"
#include "redsched/grid.hpp"
#include "redsched/rng.hpp"
#include "redsched/scenario_io.hpp"
#include "redsched/stability.hpp"
#include "redsched/stats.hpp"
#include "redsched/stochastics.hpp"
#include "redsched/trace_io.hpp"
#include "redsched/workload.hpp"
