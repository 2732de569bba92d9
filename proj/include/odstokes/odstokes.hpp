#pragma once

#include "odstokes/config.hpp"
#include "odstokes/errors.hpp"
#include "odstokes/fem.hpp"
#include "odstokes/galerkin.hpp"
#include "odstokes/lumped.hpp"
#include "odstokes/manufactured.hpp"
#include "odstokes/mesh.hpp"
#include "odstokes/mesh_io.hpp"
#include "odstokes/monitors.hpp"
#include "odstokes/outlets.hpp"
#include "odstokes/output.hpp"
#include "odstokes/quadrature.hpp"
#include "odstokes/scenario.hpp"
#include "odstokes/signal.hpp"
#include "odstokes/solver.hpp"
