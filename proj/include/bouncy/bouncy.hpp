#pragma once

#include "bouncy/bps.hpp"
#include "bouncy/chain_io.hpp"
#include "bouncy/convergence.hpp"
#include "bouncy/core.hpp"
#include "bouncy/design_csv.hpp"
#include "bouncy/diagnostics.hpp"
#include "bouncy/hbps.hpp"
#include "bouncy/integrator.hpp"
#include "bouncy/local.hpp"
#include "bouncy/nuts.hpp"
#include "bouncy/surrogates.hpp"
#include "bouncy/targets.hpp"
