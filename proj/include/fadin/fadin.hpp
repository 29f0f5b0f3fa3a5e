#pragma once

#include "fadin/discretization.hpp"
#include "fadin/errors.hpp"
#include "fadin/experiments.hpp"
#include "fadin/grid.hpp"
#include "fadin/io.hpp"
#include "fadin/kernels.hpp"
#include "fadin/model.hpp"
#include "fadin/precompute.hpp"
#include "fadin/rng.hpp"
#include "fadin/simulation.hpp"
#include "fadin/solver.hpp"
