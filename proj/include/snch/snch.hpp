#pragma once

#include "snch/config.hpp"
#include "snch/diagnostics.hpp"
#include "snch/error.hpp"
#include "snch/experiments.hpp"
#include "snch/grid.hpp"
#include "snch/io.hpp"
#include "snch/kernel.hpp"
#include "snch/noise.hpp"
#include "snch/potential.hpp"
#include "snch/random.hpp"
#include "snch/solver.hpp"
#include "snch/spectral.hpp"
