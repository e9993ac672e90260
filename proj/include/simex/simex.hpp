#pragma once

#include "simex/vector_ops.hpp"
#include "simex/tableau.hpp"
#include "simex/sparse.hpp"
#include "simex/stencils.hpp"
#include "simex/relaxation.hpp"
#include "simex/ilu.hpp"
#include "simex/cgs.hpp"
#include "simex/system.hpp"
#include "simex/filters.hpp"
#include "simex/filter_spec.hpp"
#include "simex/integrator.hpp"
#include "simex/reference.hpp"
#include "simex/problems.hpp"
#include "simex/stability.hpp"
#include "simex/convergence.hpp"
#include "simex/experiments.hpp"
