#pragma once

// Umbrella header: the whole library.

#include "heatadapt/errors.hpp"
#include "heatadapt/grid.hpp"
#include "heatadapt/materials.hpp"
#include "heatadapt/field.hpp"
#include "heatadapt/sweep.hpp"
#include "heatadapt/solver.hpp"
#include "heatadapt/state_derivatives.hpp"
#include "heatadapt/gradients.hpp"
#include "heatadapt/trainer.hpp"
#include "heatadapt/datagen.hpp"
#include "heatadapt/io.hpp"
#include "heatadapt/config.hpp"
#include "heatadapt/cli.hpp"
