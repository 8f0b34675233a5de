#pragma once

#include "commands.hpp"
#include "config.hpp"
#include "degradation.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "ll1.hpp"
#include "metrics.hpp"
#include "regularizers.hpp"
#include "solver.hpp"
#include "tensor.hpp"
#include "version.hpp"
