#pragma once

#include "flocksim/analysis.hpp"
#include "flocksim/control.hpp"
#include "flocksim/dynamics.hpp"
#include "flocksim/graph.hpp"
#include "flocksim/metrics.hpp"
#include "flocksim/potential.hpp"
#include "flocksim/rng.hpp"
#include "flocksim/scenario.hpp"
#include "flocksim/trace_io.hpp"
