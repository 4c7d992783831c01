#pragma once

#include "diffbot/actuation.hpp"
#include "diffbot/config.hpp"
#include "diffbot/control.hpp"
#include "diffbot/estimation.hpp"
#include "diffbot/kinematics.hpp"
#include "diffbot/scenario.hpp"
#include "diffbot/simulation.hpp"
