#pragma once

#include "orlx/common.hpp"
#include "orlx/grid.hpp"
#include "orlx/young.hpp"
#include "orlx/orlicz.hpp"
#include "orlx/operators.hpp"
#include "orlx/weights.hpp"
#include "orlx/extrapolation.hpp"
#include "orlx/harness.hpp"
