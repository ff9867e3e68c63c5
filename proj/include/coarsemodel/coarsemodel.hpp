#pragma once

#include "coarsemodel/error.hpp"
#include "coarsemodel/lie/algebra.hpp"
#include "coarsemodel/lie/iwasawa.hpp"
#include "coarsemodel/lie/roots.hpp"
#include "coarsemodel/carnot/algebra.hpp"
#include "coarsemodel/carnot/lattice.hpp"
#include "coarsemodel/carnot/metric.hpp"
#include "coarsemodel/symspace/warped_metric.hpp"
#include "coarsemodel/symspace/distance.hpp"
#include "coarsemodel/coarse/metric_space.hpp"
#include "coarsemodel/coarse/action.hpp"
#include "coarsemodel/coarse/matching.hpp"
#include "coarsemodel/net/net.hpp"
#include "coarsemodel/quotient/quotient.hpp"
#include "coarsemodel/io/io.hpp"
