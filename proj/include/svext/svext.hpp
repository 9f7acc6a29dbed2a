#pragma once

#include "svext/distributions.hpp"
#include "svext/error.hpp"
#include "svext/estimators.hpp"
#include "svext/experiments.hpp"
#include "svext/io.hpp"
#include "svext/models.hpp"
#include "svext/parallel.hpp"
#include "svext/rng.hpp"
#include "svext/theory.hpp"
#include "svext/version.hpp"
