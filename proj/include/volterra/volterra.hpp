#pragma once

#include "volterra/random.hpp"
#include "volterra/parallel.hpp"
#include "volterra/stats.hpp"
#include "volterra/quadrature.hpp"
#include "volterra/levy.hpp"
#include "volterra/kernels.hpp"
#include "volterra/pathbuild.hpp"
#include "volterra/analysis.hpp"
#include "volterra/io/csv.hpp"
#include "volterra/io/config.hpp"
#include "volterra/io/experiment.hpp"
