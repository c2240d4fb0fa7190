#pragma once

#include "incdet/config.hpp"
#include "incdet/csv.hpp"
#include "incdet/dataset.hpp"
#include "incdet/decision.hpp"
#include "incdet/ensemble.hpp"
#include "incdet/errors.hpp"
#include "incdet/eval.hpp"
#include "incdet/experiment.hpp"
#include "incdet/generator.hpp"
#include "incdet/model.hpp"
#include "incdet/net.hpp"
#include "incdet/partition.hpp"
#include "incdet/rng.hpp"
#include "incdet/standardize.hpp"
#include "incdet/theory.hpp"
#include "incdet/tree.hpp"
#include "incdet/uncertainty.hpp"
