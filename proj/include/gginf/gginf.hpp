#pragma once

#include "gginf/error.hpp"
#include "gginf/estimators.hpp"
#include "gginf/limitproc.hpp"
#include "gginf/mc.hpp"
#include "gginf/models.hpp"
#include "gginf/numeric.hpp"
#include "gginf/pathgen.hpp"
#include "gginf/rng.hpp"
#include "gginf/statistics.hpp"
