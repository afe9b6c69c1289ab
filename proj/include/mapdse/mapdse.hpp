#pragma once

#include "benchmark.hpp"
#include "core.hpp"
#include "ga.hpp"
#include "harness.hpp"
#include "heuristics.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "problem_io.hpp"
#include "simulator.hpp"
