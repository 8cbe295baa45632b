#pragma once

#include "fdpair/assignment.hpp"
#include "fdpair/auction.hpp"
#include "fdpair/channel_model.hpp"
#include "fdpair/cli.hpp"
#include "fdpair/config_io.hpp"
#include "fdpair/harness.hpp"
#include "fdpair/pair_power.hpp"
#include "fdpair/units.hpp"
#include "fdpair/verify.hpp"
