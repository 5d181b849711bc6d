// Apache License, Version 2.0, refer to LICENSE.txt.
//
// Convenience header pulling in the whole library.

#pragma once

#include "latrec/analysis.hpp"
#include "latrec/bilinear.hpp"
#include "latrec/cli.hpp"
#include "latrec/data.hpp"
#include "latrec/errors.hpp"
#include "latrec/gibbs.hpp"
#include "latrec/metrics.hpp"
#include "latrec/model.hpp"
#include "latrec/model_io.hpp"
#include "latrec/retrieval.hpp"
#include "latrec/rng.hpp"
#include "latrec/scoring.hpp"
#include "latrec/split.hpp"
#include "latrec/synthetic.hpp"
#include "latrec/text.hpp"
#include "latrec/trainer.hpp"
