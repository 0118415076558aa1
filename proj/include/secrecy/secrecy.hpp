#pragma once

#include "secrecy/errors.hpp"
#include "secrecy/numerics.hpp"
#include "secrecy/partitions.hpp"
#include "secrecy/model.hpp"
#include "secrecy/power.hpp"
#include "secrecy/sirdist.hpp"
#include "secrecy/metrics.hpp"
#include "secrecy/montecarlo.hpp"
#include "secrecy/optimize.hpp"
#include "secrecy/config_io.hpp"
