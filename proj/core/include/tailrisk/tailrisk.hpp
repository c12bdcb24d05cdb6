#pragma once

#include "tailrisk/dataio.hpp"
#include "tailrisk/errors.hpp"
#include "tailrisk/loss.hpp"
#include "tailrisk/models.hpp"
#include "tailrisk/smoothing.hpp"
#include "tailrisk/solvers.hpp"
#include "tailrisk/superquantile.hpp"
#include "tailrisk/types.hpp"
