#pragma once

#include "forum/core/config.hpp"
#include "forum/core/errors.hpp"
#include "forum/core/problem.hpp"
#include "forum/core/rng.hpp"
#include "forum/core/types.hpp"
#include "forum/core/validate.hpp"
#include "forum/core/workspace.hpp"

#include "forum/direction.hpp"
#include "forum/lower_level.hpp"

#include "forum/baselines.hpp"
#include "forum/driver.hpp"

#include "forum/problems/hyperclean.hpp"
#include "forum/problems/quadratic.hpp"
#include "forum/problems/synthetic.hpp"
