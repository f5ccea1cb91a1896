#pragma once

#include "baselines.hpp"
#include "bench.hpp"
#include "errors.hpp"
#include "grouping.hpp"
#include "io.hpp"
#include "linalg.hpp"
#include "penalty.hpp"
#include "probgen.hpp"
#include "prox.hpp"
#include "schedule.hpp"
#include "solver.hpp"
