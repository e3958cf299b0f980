#pragma once

// Everything at once.

#include "erlab/degeneracy.hpp"
#include "erlab/dimlab.hpp"
#include "erlab/errors.hpp"
#include "erlab/expr.hpp"
#include "erlab/foldgeom.hpp"
#include "erlab/fractal.hpp"
#include "erlab/function_spec.hpp"
#include "erlab/io.hpp"
#include "erlab/number.hpp"
#include "erlab/parse.hpp"
#include "erlab/quadrature.hpp"
#include "erlab/report_json.hpp"
#include "erlab/simplify.hpp"
#include "erlab/specialform.hpp"
#include "erlab/thresholds.hpp"
