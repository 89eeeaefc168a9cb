#pragma once

#include "mmdmp/adam.hpp"
#include "mmdmp/deep_kernel.hpp"
#include "mmdmp/diagnostics.hpp"
#include "mmdmp/embeddings.hpp"
#include "mmdmp/error.hpp"
#include "mmdmp/estimators.hpp"
#include "mmdmp/featurizer.hpp"
#include "mmdmp/model_io.hpp"
#include "mmdmp/objective.hpp"
#include "mmdmp/parallel.hpp"
#include "mmdmp/rng.hpp"
#include "mmdmp/run_config.hpp"
#include "mmdmp/sample_set.hpp"
#include "mmdmp/synthetic.hpp"
#include "mmdmp/testing.hpp"
#include "mmdmp/training.hpp"
#include "mmdmp/experiments.hpp"
