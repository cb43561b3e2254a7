#pragma once

#include "cardsel/calibration.hpp"
#include "cardsel/derivatives.hpp"
#include "cardsel/diagnostics.hpp"
#include "cardsel/error.hpp"
#include "cardsel/experiments.hpp"
#include "cardsel/io.hpp"
#include "cardsel/metrics.hpp"
#include "cardsel/rng.hpp"
#include "cardsel/solvers.hpp"
#include "cardsel/stats.hpp"
