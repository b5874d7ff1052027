// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cpsim/analysis.hpp"
#include "cpsim/config.hpp"
#include "cpsim/control.hpp"
#include "cpsim/csv.hpp"
#include "cpsim/eln.hpp"
#include "cpsim/eln_tdf.hpp"
#include "cpsim/error.hpp"
#include "cpsim/power.hpp"
#include "cpsim/relay.hpp"
#include "cpsim/rt.hpp"
#include "cpsim/scenarios.hpp"
#include "cpsim/tdf.hpp"
#include "cpsim/units.hpp"
