#pragma once

#include "quadkit/error.hpp"
#include "quadkit/linalg.hpp"
#include "quadkit/orthopoly.hpp"
#include "quadkit/quadrature.hpp"
#include "quadkit/sampling.hpp"
#include "quadkit/subselect.hpp"
#include "quadkit/diagnostics.hpp"
#include "quadkit/io.hpp"
#include "quadkit/experiments.hpp"
