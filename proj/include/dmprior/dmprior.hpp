#pragma once

// Umbrella header for the core library (YAML configuration lives in
// dmprior/config.hpp and is not included here).

#include "dmprior/analysis.hpp"
#include "dmprior/csv.hpp"
#include "dmprior/diagnostics.hpp"
#include "dmprior/elicit.hpp"
#include "dmprior/error.hpp"
#include "dmprior/ingest.hpp"
#include "dmprior/matrix.hpp"
#include "dmprior/model.hpp"
#include "dmprior/parallel.hpp"
#include "dmprior/protocol.hpp"
#include "dmprior/report_io.hpp"
#include "dmprior/rng.hpp"
#include "dmprior/sampler.hpp"
#include "dmprior/svg.hpp"
#include "dmprior/synthbench.hpp"
