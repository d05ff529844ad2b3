#pragma once

#include "semistatic/rational.hpp"
#include "semistatic/tree_market.hpp"
#include "semistatic/exact_lp.hpp"
#include "semistatic/polytope.hpp"
#include "semistatic/stopping.hpp"
#include "semistatic/measures.hpp"
#include "semistatic/market_io.hpp"
#include "semistatic/strategy_lp.hpp"
#include "semistatic/hedging.hpp"
#include "semistatic/ftap.hpp"
#include "semistatic/robust.hpp"
#include "semistatic/utility.hpp"
#include "semistatic/fixtures.hpp"
