#pragma once

#include "sekq/arrivals.hpp"
#include "sekq/config.hpp"
#include "sekq/coupled.hpp"
#include "sekq/engine.hpp"
#include "sekq/errors.hpp"
#include "sekq/experiments.hpp"
#include "sekq/job.hpp"
#include "sekq/joint_state.hpp"
#include "sekq/params.hpp"
#include "sekq/policies.hpp"
#include "sekq/report.hpp"
#include "sekq/rng.hpp"
#include "sekq/spec_string.hpp"
#include "sekq/stats.hpp"
#include "sekq/workload.hpp"
