#pragma once

#include "spotmcmc/commands.hpp"
#include "spotmcmc/diagnostics.hpp"
#include "spotmcmc/io.hpp"
#include "spotmcmc/mcmc.hpp"
#include "spotmcmc/model.hpp"
#include "spotmcmc/plot.hpp"
#include "spotmcmc/priors.hpp"
#include "spotmcmc/quadrature.hpp"
#include "spotmcmc/rng.hpp"
#include "spotmcmc/seasonal.hpp"
#include "spotmcmc/selection.hpp"
#include "spotmcmc/simulate.hpp"
