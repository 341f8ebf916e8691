#pragma once

// Umbrella header for the numerical library (no YAML or file I/O).

#include "rfi/analysis.hpp"
#include "rfi/engine.hpp"
#include "rfi/errors.hpp"
#include "rfi/geometry.hpp"
#include "rfi/operators.hpp"
#include "rfi/random.hpp"
#include "rfi/regularity.hpp"
#include "rfi/scenarios.hpp"
#include "rfi/transport.hpp"
#include "rfi/version.hpp"
