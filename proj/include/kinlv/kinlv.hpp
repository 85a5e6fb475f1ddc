#pragma once

// Kinetic predator-prey toolkit: microscopic interaction rules, a
// Boltzmann-type Monte Carlo particle simulator, the coupled Fokker-Planck
// solver, closed moment systems, Gamma quasi-equilibria and the distance
// diagnostics connecting them.

#include "kinlv/boltzmann_mc.hpp"
#include "kinlv/csv.hpp"
#include "kinlv/diagnostics.hpp"
#include "kinlv/equilibria.hpp"
#include "kinlv/fokker_planck.hpp"
#include "kinlv/microdyn.hpp"
#include "kinlv/moments.hpp"
#include "kinlv/params.hpp"
#include "kinlv/rng.hpp"
