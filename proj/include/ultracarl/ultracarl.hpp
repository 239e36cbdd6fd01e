#pragma once

// Umbrella header.

#include "ultracarl/core.hpp"
#include "ultracarl/geometry.hpp"
#include "ultracarl/domain.hpp"
#include "ultracarl/weight.hpp"
#include "ultracarl/fields.hpp"
#include "ultracarl/quadrature.hpp"
#include "ultracarl/regions.hpp"
#include "ultracarl/verify.hpp"
#include "ultracarl/config.hpp"
#include "ultracarl/report.hpp"
#include "ultracarl/commands.hpp"
