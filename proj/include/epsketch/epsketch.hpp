#pragma once

#include "epsketch/bench.hpp"
#include "epsketch/bipartite.hpp"
#include "epsketch/bitstream.hpp"
#include "epsketch/core.hpp"
#include "epsketch/error.hpp"
#include "epsketch/grid_codec.hpp"
#include "epsketch/jl_project.hpp"
#include "epsketch/lb_witness.hpp"
#include "epsketch/points_io.hpp"
#include "epsketch/rng.hpp"
#include "epsketch/sketch.hpp"
