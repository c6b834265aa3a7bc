#pragma once

#include "cuspad/cart.hpp"
#include "cuspad/evaluation.hpp"
#include "cuspad/experiment.hpp"
#include "cuspad/features.hpp"
#include "cuspad/io_util.hpp"
#include "cuspad/island_cuts.hpp"
#include "cuspad/measured.hpp"
#include "cuspad/measurement.hpp"
#include "cuspad/network.hpp"
#include "cuspad/placement.hpp"
#include "cuspad/rng.hpp"
#include "cuspad/scenario.hpp"
#include "cuspad/swing_sim.hpp"
