#pragma once

#include "errors.hpp"
#include "numerics.hpp"
#include "specfun.hpp"
#include "params.hpp"
#include "halfspace.hpp"
#include "cylinder.hpp"
#include "mortality.hpp"
#include "simulate.hpp"
#include "cli.hpp"
