#pragma once

// Umbrella header for the effdyn library.

#include "effdyn/drive_mode.hpp"
#include "effdyn/dynamics.hpp"
#include "effdyn/errors.hpp"
#include "effdyn/metrics.hpp"
#include "effdyn/oracle.hpp"
#include "effdyn/polygon.hpp"
#include "effdyn/presets.hpp"
#include "effdyn/topology.hpp"
#include "effdyn/wedge.hpp"
