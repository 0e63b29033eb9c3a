#pragma once

#include "onebit/adaptive.hpp"
#include "onebit/analysis.hpp"
#include "onebit/bench.hpp"
#include "onebit/polyhedron.hpp"
#include "onebit/rng.hpp"
#include "onebit/row_provider.hpp"
#include "onebit/sensing.hpp"
#include "onebit/serialize.hpp"
#include "onebit/solvers.hpp"
#include "onebit/structured.hpp"
