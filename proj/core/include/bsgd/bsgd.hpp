#pragma once

#include "bsgd/baselines.hpp"
#include "bsgd/common.hpp"
#include "bsgd/cso.hpp"
#include "bsgd/diagnostics.hpp"
#include "bsgd/engine.hpp"
#include "bsgd/lower_bound.hpp"
#include "bsgd/nn.hpp"
#include "bsgd/problems.hpp"
#include "bsgd/rng.hpp"
