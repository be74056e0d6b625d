#ifndef NLBVP_NLBVP_HPP
#define NLBVP_NLBVP_HPP

#include "nlbvp/analytic.hpp"
#include "nlbvp/config.hpp"
#include "nlbvp/errors.hpp"
#include "nlbvp/expression.hpp"
#include "nlbvp/fields.hpp"
#include "nlbvp/geometry.hpp"
#include "nlbvp/linear_algebra.hpp"
#include "nlbvp/local_solver.hpp"
#include "nlbvp/nonlocal.hpp"
#include "nlbvp/nonlocal_functional.hpp"
#include "nlbvp/verify.hpp"

#endif
