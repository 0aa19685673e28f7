#pragma once

#include "genprior/analysis.hpp"
#include "genprior/common.hpp"
#include "genprior/experiment.hpp"
#include "genprior/genmodel.hpp"
#include "genprior/io.hpp"
#include "genprior/measurement.hpp"
#include "genprior/parallel.hpp"
#include "genprior/projection.hpp"
#include "genprior/sensing.hpp"
#include "genprior/solvers.hpp"
