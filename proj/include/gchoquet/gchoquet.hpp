#pragma once

// Umbrella header: discrete-time g-expectations on recombining Brownian
// lattices, g-capacities with exact layered Choquet integration, closed-form
// Gaussian oracles, and the suite runner comparing the two expectations.

#include "gchoquet/lattice.hpp"
#include "gchoquet/claims.hpp"
#include "gchoquet/generators.hpp"
#include "gchoquet/oracles.hpp"
#include "gchoquet/bsde.hpp"
#include "gchoquet/choquet.hpp"
#include "gchoquet/lab.hpp"
