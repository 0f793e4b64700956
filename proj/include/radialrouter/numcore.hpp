#pragma once

#include "radialrouter/numcore/attention.hpp"
#include "radialrouter/numcore/grad_check.hpp"
#include "radialrouter/numcore/ops.hpp"
#include "radialrouter/numcore/tape.hpp"
#include "radialrouter/numcore/tensor.hpp"
