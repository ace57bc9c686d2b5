// Umbrella header.
#pragma once

#include "rfrob/chart.hpp"
#include "rfrob/expr.hpp"
#include "rfrob/flow.hpp"
#include "rfrob/grid.hpp"
#include "rfrob/holder.hpp"
#include "rfrob/involutivity.hpp"
#include "rfrob/modulus.hpp"
#include "rfrob/paraproduct.hpp"
#include "rfrob/pde.hpp"
#include "rfrob/spectral.hpp"
#include "rfrob/version.hpp"
