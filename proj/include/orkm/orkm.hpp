#pragma once

#include "baselines.hpp"
#include "core_model.hpp"
#include "datagen.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "optim_kernels.hpp"
#include "orkmc.hpp"
#include "rkmc.hpp"
#include "rng.hpp"
#include "seeding.hpp"
