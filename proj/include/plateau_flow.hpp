#pragma once

#include "plateau_flow/collar.hpp"
#include "plateau_flow/dirichlet.hpp"
#include "plateau_flow/error.hpp"
#include "plateau_flow/flow.hpp"
#include "plateau_flow/grid.hpp"
#include "plateau_flow/hopf.hpp"
#include "plateau_flow/io.hpp"
#include "plateau_flow/isotonic.hpp"
#include "plateau_flow/metric.hpp"
#include "plateau_flow/moebius.hpp"
#include "plateau_flow/parallel.hpp"
#include "plateau_flow/plateau.hpp"
#include "plateau_flow/presets.hpp"
#include "plateau_flow/spline.hpp"
#include "plateau_flow/verify.hpp"
