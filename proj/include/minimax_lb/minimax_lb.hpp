#pragma once

#include "minimax_lb/algorithms.hpp"
#include "minimax_lb/chain.hpp"
#include "minimax_lb/config.hpp"
#include "minimax_lb/instances.hpp"
#include "minimax_lb/oracles.hpp"
#include "minimax_lb/rng.hpp"
#include "minimax_lb/special_functions.hpp"
#include "minimax_lb/tridiagonal.hpp"
#include "minimax_lb/verify.hpp"
