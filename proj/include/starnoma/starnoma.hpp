#pragma once

#include "starnoma/channel.hpp"
#include "starnoma/closed_form.hpp"
#include "starnoma/config.hpp"
#include "starnoma/csv.hpp"
#include "starnoma/fixed_point.hpp"
#include "starnoma/gsvd.hpp"
#include "starnoma/pgam.hpp"
#include "starnoma/power_factor.hpp"
#include "starnoma/quadrature.hpp"
#include "starnoma/rate_integrals.hpp"
#include "starnoma/rates.hpp"
#include "starnoma/scenario.hpp"
#include "starnoma/stats.hpp"
