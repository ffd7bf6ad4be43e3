#pragma once

#include "autoverse/core.hpp"
#include "autoverse/dataset.hpp"
#include "autoverse/dsl.hpp"
#include "autoverse/evolve.hpp"
#include "autoverse/maze.hpp"
#include "autoverse/render.hpp"
#include "autoverse/rule_engine.hpp"
#include "autoverse/search.hpp"
#include "autoverse/sim.hpp"
