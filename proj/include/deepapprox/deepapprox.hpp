#pragma once

#include "deepapprox/analysis.hpp"
#include "deepapprox/bit_decoder.hpp"
#include "deepapprox/cheb_interp.hpp"
#include "deepapprox/cli.hpp"
#include "deepapprox/combinators.hpp"
#include "deepapprox/grid.hpp"
#include "deepapprox/multivar.hpp"
#include "deepapprox/net_core.hpp"
#include "deepapprox/report.hpp"
#include "deepapprox/serialize.hpp"
#include "deepapprox/target.hpp"
#include "deepapprox/uni_builder.hpp"
