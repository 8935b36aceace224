#pragma once

// Power allocation for fixed-rate coded modulation over block-fading
// channels: mutual-information/MMSE machinery, short- and long-term
// allocators, outage Monte Carlo, and the batch scenario runner.

#include "bfpa/constellation.hpp"
#include "bfpa/fading.hpp"
#include "bfpa/infotheory.hpp"
#include "bfpa/longterm.hpp"
#include "bfpa/outage.hpp"
#include "bfpa/powalloc.hpp"
#include "bfpa/profile.hpp"
#include "bfpa/scenario.hpp"
