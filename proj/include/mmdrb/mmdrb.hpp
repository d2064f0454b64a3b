#pragma once

// Umbrella header: worst-case risk bounds over MMD ambiguity sets.

#include "mmdrb/bounds.hpp"
#include "mmdrb/control_sim.hpp"
#include "mmdrb/embedding.hpp"
#include "mmdrb/kernel.hpp"
#include "mmdrb/moment_problem.hpp"
#include "mmdrb/parallel.hpp"
#include "mmdrb/solver.hpp"
#include "mmdrb/types.hpp"
