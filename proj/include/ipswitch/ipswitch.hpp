#pragma once

#include "ipswitch/asymptotics.hpp"
#include "ipswitch/bifurcation.hpp"
#include "ipswitch/config.hpp"
#include "ipswitch/engine.hpp"
#include "ipswitch/filippov.hpp"
#include "ipswitch/history.hpp"
#include "ipswitch/integrate.hpp"
#include "ipswitch/io.hpp"
#include "ipswitch/model.hpp"
#include "ipswitch/oscillation.hpp"
#include "ipswitch/params.hpp"
#include "ipswitch/roots.hpp"
#include "ipswitch/sweep.hpp"
