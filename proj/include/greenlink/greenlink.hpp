#pragma once

#include "greenlink/analysis.hpp"
#include "greenlink/bvp.hpp"
#include "greenlink/coefficient.hpp"
#include "greenlink/errors.hpp"
#include "greenlink/fundamental.hpp"
#include "greenlink/green.hpp"
#include "greenlink/grid.hpp"
#include "greenlink/linking.hpp"
#include "greenlink/oracles.hpp"
#include "greenlink/parallel.hpp"
#include "greenlink/quadrature.hpp"
#include "greenlink/recurrence.hpp"
