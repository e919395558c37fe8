#pragma once

#include "multilens/bipoly.hpp"
#include "multilens/bounds.hpp"
#include "multilens/config_io.hpp"
#include "multilens/construct.hpp"
#include "multilens/ensemble.hpp"
#include "multilens/errors.hpp"
#include "multilens/resultant.hpp"
#include "multilens/sampling.hpp"
#include "multilens/solver.hpp"
