#pragma once

#include "memvisco/error.hpp"
#include "memvisco/kernel.hpp"
#include "memvisco/tensor.hpp"
#include "memvisco/grid.hpp"
#include "memvisco/forcing.hpp"
#include "memvisco/trajectory.hpp"
#include "memvisco/solver.hpp"
#include "memvisco/stress.hpp"
#include "memvisco/diagnostics.hpp"
#include "memvisco/convergence.hpp"
#include "memvisco/config.hpp"
#include "memvisco/experiment.hpp"
