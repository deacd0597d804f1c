#pragma once

#include "rcurv/error.hpp"
#include "rcurv/jet.hpp"
#include "rcurv/expr.hpp"
#include "rcurv/space.hpp"
#include "rcurv/geom.hpp"
#include "rcurv/quadrature.hpp"
#include "rcurv/field.hpp"
#include "rcurv/distr.hpp"
#include "rcurv/report.hpp"
#include "rcurv/suite.hpp"
#include "rcurv/scenario.hpp"
