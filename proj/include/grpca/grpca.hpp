#pragma once

#include "grpca/datagen.hpp"
#include "grpca/error.hpp"
#include "grpca/graphs.hpp"
#include "grpca/io.hpp"
#include "grpca/metrics.hpp"
#include "grpca/models.hpp"
#include "grpca/numerics.hpp"
#include "grpca/precision.hpp"
#include "grpca/random.hpp"
#include "grpca/version.hpp"
