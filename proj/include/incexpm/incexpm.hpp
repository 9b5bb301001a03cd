#pragma once

#include "incexpm/error.hpp"
#include "incexpm/dense.hpp"
#include "incexpm/pade.hpp"
#include "incexpm/block.hpp"
#include "incexpm/incremental.hpp"
#include "incexpm/generators.hpp"
#include "incexpm/pricing.hpp"
#include "incexpm/bench.hpp"
#include "incexpm/io.hpp"
