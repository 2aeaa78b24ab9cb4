#pragma once

// Umbrella header for the whole library.

#include "dagnet/config.hpp"
#include "dagnet/data.hpp"
#include "dagnet/engine.hpp"
#include "dagnet/gaussian.hpp"
#include "dagnet/goal_grid.hpp"
#include "dagnet/graph.hpp"
#include "dagnet/metrics.hpp"
#include "dagnet/model.hpp"
#include "dagnet/nn.hpp"
#include "dagnet/scene.hpp"
#include "dagnet/svg.hpp"
#include "dagnet/tensor.hpp"
