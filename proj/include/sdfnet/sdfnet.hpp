#pragma once

#include "sdfnet/dse.hpp"
#include "sdfnet/frontend.hpp"
#include "sdfnet/model.hpp"
#include "sdfnet/perf.hpp"
#include "sdfnet/platform.hpp"
#include "sdfnet/rational.hpp"
#include "sdfnet/report.hpp"
#include "sdfnet/sdf.hpp"
#include "sdfnet/sim.hpp"
#include "sdfnet/transforms.hpp"
