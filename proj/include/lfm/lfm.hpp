#pragma once

#include "lfm/covariance.hpp"
#include "lfm/csv.hpp"
#include "lfm/errors.hpp"
#include "lfm/factor.hpp"
#include "lfm/inference.hpp"
#include "lfm/panel.hpp"
#include "lfm/propensity.hpp"
#include "lfm/simulate.hpp"
#include "lfm/stats.hpp"
#include "lfm/treatment.hpp"
