#pragma once

#include "pcsamp/attention.hpp"
#include "pcsamp/bench.hpp"
#include "pcsamp/bins.hpp"
#include "pcsamp/errors.hpp"
#include "pcsamp/geometry.hpp"
#include "pcsamp/io.hpp"
#include "pcsamp/metrics.hpp"
#include "pcsamp/pipeline.hpp"
#include "pcsamp/point_cloud.hpp"
#include "pcsamp/rng.hpp"
#include "pcsamp/scoring.hpp"
#include "pcsamp/shapes.hpp"
