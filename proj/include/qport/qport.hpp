#pragma once

#include "qport/analytic.hpp"
#include "qport/core.hpp"
#include "qport/experiment.hpp"
#include "qport/io.hpp"
#include "qport/market.hpp"
#include "qport/solvers.hpp"
#include "qport/variance_model.hpp"
#include "qport/version.hpp"
