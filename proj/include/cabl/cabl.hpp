#pragma once

// Umbrella header.

#include "bench.hpp"
#include "cache_sim.hpp"
#include "dense.hpp"
#include "descriptor_json.hpp"
#include "io_bounds.hpp"
#include "kernels.hpp"
#include "machine.hpp"
