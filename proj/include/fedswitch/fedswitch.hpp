#pragma once

#include "fedswitch/baselines.hpp"
#include "fedswitch/core.hpp"
#include "fedswitch/datasets.hpp"
#include "fedswitch/models.hpp"
#include "fedswitch/optimizer.hpp"
#include "fedswitch/problems/fairness.hpp"
#include "fedswitch/problems/neyman_pearson.hpp"
#include "fedswitch/problems/oracle.hpp"
#include "fedswitch/problems/synthetic.hpp"
#include "fedswitch/rng.hpp"
#include "fedswitch/round_common.hpp"
#include "fedswitch/sampling.hpp"
#include "fedswitch/softmax.hpp"
#include "fedswitch/theory.hpp"
#include "fedswitch/harness/experiment.hpp"
