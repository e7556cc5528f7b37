#pragma once

// Registration of misaligned functional data pairs onto a common time scale,
// pooled Nadaraya-Watson mean estimation, bootstrap inference, and the
// asymptotic/identifiability calculators that go with them.

#include "curvepool/config.hpp"
#include "curvepool/dataset.hpp"
#include "curvepool/errors.hpp"
#include "curvepool/estimator.hpp"
#include "curvepool/inference.hpp"
#include "curvepool/io.hpp"
#include "curvepool/kernel.hpp"
#include "curvepool/model_config.hpp"
#include "curvepool/parallel.hpp"
#include "curvepool/registration.hpp"
#include "curvepool/rng.hpp"
#include "curvepool/simulate.hpp"
#include "curvepool/theory.hpp"
#include "curvepool/warp.hpp"
