#pragma once

#include "hyperobs/assembly.hpp"
#include "hyperobs/certify.hpp"
#include "hyperobs/designer.hpp"
#include "hyperobs/dynamics.hpp"
#include "hyperobs/errors.hpp"
#include "hyperobs/gain_design.hpp"
#include "hyperobs/generator.hpp"
#include "hyperobs/hypergraph.hpp"
#include "hyperobs/linalg.hpp"
#include "hyperobs/rng.hpp"
#include "hyperobs/signed_graph.hpp"
#include "hyperobs/sim.hpp"
