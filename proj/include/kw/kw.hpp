#pragma once

// Umbrella header: sequential test design for discrete exponential families.

#include "kw/design.hpp"
#include "kw/evaluate.hpp"
#include "kw/expfam.hpp"
#include "kw/fss.hpp"
#include "kw/serialize.hpp"
#include "kw/simplex.hpp"
#include "kw/solve.hpp"
#include "kw/sprt.hpp"
