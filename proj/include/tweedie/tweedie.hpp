#pragma once

#include "tweedie/csv.hpp"
#include "tweedie/dataset.hpp"
#include "tweedie/density.hpp"
#include "tweedie/error.hpp"
#include "tweedie/eval.hpp"
#include "tweedie/glm.hpp"
#include "tweedie/profile.hpp"
#include "tweedie/report.hpp"
#include "tweedie/tobit.hpp"
#include "tweedie/twopart.hpp"
