#pragma once

#include "truncnoise/baselines.hpp"
#include "truncnoise/buckets.hpp"
#include "truncnoise/compare.hpp"
#include "truncnoise/diff.hpp"
#include "truncnoise/errors.hpp"
#include "truncnoise/evaluate.hpp"
#include "truncnoise/exact_oracle.hpp"
#include "truncnoise/grid.hpp"
#include "truncnoise/io.hpp"
#include "truncnoise/losses.hpp"
#include "truncnoise/model.hpp"
#include "truncnoise/moments.hpp"
#include "truncnoise/noise.hpp"
#include "truncnoise/rng.hpp"
#include "truncnoise/sample.hpp"
#include "truncnoise/train.hpp"
#include "truncnoise/verify.hpp"
#include "truncnoise/worst_case.hpp"
