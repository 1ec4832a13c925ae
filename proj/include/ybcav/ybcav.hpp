#pragma once

#include "ybcav/units.hpp"
#include "ybcav/angular.hpp"
#include "ybcav/atomic.hpp"
#include "ybcav/lightshift.hpp"
#include "ybcav/dynamics.hpp"
#include "ybcav/transit.hpp"
#include "ybcav/observables.hpp"
#include "ybcav/io.hpp"
#include "ybcav/config.hpp"
#include "ybcav/commands.hpp"
