#pragma once
//! \file ampest/ampest.hpp
//! Convenience header for the whole library.

#include "benchmark.hpp"
#include "distributions.hpp"
#include "estimators.hpp"
#include "numerics.hpp"
#include "properties.hpp"
#include "selfcheck.hpp"
