#pragma once

#include "content_baseline.hpp"
#include "engines/complete.hpp"
#include "error.hpp"
#include "eval_harness.hpp"
#include "experiment/dataset.hpp"
#include "experiment/experiment.hpp"
#include "experiment/learners.hpp"
#include "experiment/synthetic.hpp"
#include "perf_matrix.hpp"
#include "recommender.hpp"

namespace metacf {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace metacf
