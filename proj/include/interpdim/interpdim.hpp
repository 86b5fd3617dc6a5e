#pragma once

#include "interpdim/baselines.hpp"
#include "interpdim/datasets.hpp"
#include "interpdim/dimensions.hpp"
#include "interpdim/embeddings.hpp"
#include "interpdim/error.hpp"
#include "interpdim/experiment_config.hpp"
#include "interpdim/harness.hpp"
#include "interpdim/metrics.hpp"
#include "interpdim/projection.hpp"
#include "interpdim/report_io.hpp"
#include "interpdim/serialize.hpp"
