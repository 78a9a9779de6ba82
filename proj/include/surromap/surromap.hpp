#pragma once

#include "surromap/data_io.hpp"
#include "surromap/efast.hpp"
#include "surromap/error.hpp"
#include "surromap/hvac.hpp"
#include "surromap/metamodel.hpp"
#include "surromap/mlp.hpp"
#include "surromap/pruning.hpp"
