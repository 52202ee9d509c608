#pragma once

//! Boundary-adaptive local polynomial conditional density estimation:
//! point estimates and derivatives, data-driven bandwidths, covariance
//! estimation, and uniform inference via simulated Gaussian suprema.

#define LPCD_VERSION "0.1.0"

#include "bandwidth.hpp"
#include "covariance.hpp"
#include "design.hpp"
#include "estimator.hpp"
#include "inference.hpp"
#include "io.hpp"
#include "kernels.hpp"
#include "linalg.hpp"
#include "multi_index.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "rng.hpp"
#include "simulation.hpp"
#include "types.hpp"
