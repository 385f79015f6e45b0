#pragma once

// Convenience header pulling in the whole library.

#include "mkfk/archive_io.hpp"
#include "mkfk/config.hpp"
#include "mkfk/config_io.hpp"
#include "mkfk/core.hpp"
#include "mkfk/csv.hpp"
#include "mkfk/dynamics.hpp"
#include "mkfk/fields.hpp"
#include "mkfk/fixedpoint.hpp"
#include "mkfk/initial_density.hpp"
#include "mkfk/kernel.hpp"
#include "mkfk/metrics.hpp"
#include "mkfk/parallel.hpp"
#include "mkfk/particles.hpp"
#include "mkfk/pde.hpp"
#include "mkfk/random.hpp"
