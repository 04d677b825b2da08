#pragma once

// Umbrella header for the library (the CLI layer stays separate in
// udw/config.hpp and udw/cli.hpp).

#include "udw/vec.hpp"
#include "udw/specfun.hpp"
#include "udw/quadrature.hpp"
#include "udw/kinematics.hpp"
#include "udw/distribution.hpp"
#include "udw/statistics.hpp"
#include "udw/oracle.hpp"
#include "udw/parallel.hpp"
