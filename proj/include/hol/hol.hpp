#pragma once

#include "hol/analytics.hpp"
#include "hol/config.hpp"
#include "hol/experiment.hpp"
#include "hol/routing.hpp"
#include "hol/simulation.hpp"
#include "hol/types.hpp"
