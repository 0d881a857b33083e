#pragma once

#include "corrq/config.hpp"
#include "corrq/coupling.hpp"
#include "corrq/engine.hpp"
#include "corrq/error.hpp"
#include "corrq/harness.hpp"
#include "corrq/limits.hpp"
#include "corrq/model.hpp"
#include "corrq/rng.hpp"
#include "corrq/scaling.hpp"
#include "corrq/simulate.hpp"
#include "corrq/stationary.hpp"
#include "corrq/stats.hpp"
