#pragma once

// Out-of-source error estimation for multi-source data: the unbiased
// estimator, its variance decomposition, normal-theory closed forms,
// feasibility checks for unbiased variance estimation, and a seeded
// Monte Carlo harness.

#include "oos/csv.hpp"
#include "oos/dataset.hpp"
#include "oos/distributions.hpp"
#include "oos/errors.hpp"
#include "oos/estimator.hpp"
#include "oos/loss.hpp"
#include "oos/normal_theory.hpp"
#include "oos/report.hpp"
#include "oos/rng.hpp"
#include "oos/scenario_file.hpp"
#include "oos/simulation.hpp"
#include "oos/variance_tools.hpp"
