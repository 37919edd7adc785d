#pragma once

#include "wynerlab/error.hpp"
#include "wynerlab/prob.hpp"
#include "wynerlab/rng.hpp"
#include "wynerlab/parallel.hpp"
#include "wynerlab/divergence.hpp"
#include "wynerlab/simplex_opt.hpp"
#include "wynerlab/ci.hpp"
#include "wynerlab/exponents.hpp"
#include "wynerlab/typicality.hpp"
#include "wynerlab/synthesis.hpp"
#include "wynerlab/fixtures.hpp"
#include "wynerlab/plan.hpp"
#include "wynerlab/acceptance.hpp"
