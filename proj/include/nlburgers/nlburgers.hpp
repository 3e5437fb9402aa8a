#pragma once

// Finite-volume schemes for the local and nonlocal Burgers equations.

#include "nlburgers/exact.hpp"
#include "nlburgers/experiments.hpp"
#include "nlburgers/kernels.hpp"
#include "nlburgers/mesh.hpp"
#include "nlburgers/metrics.hpp"
#include "nlburgers/schemes.hpp"
