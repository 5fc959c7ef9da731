#pragma once

#include <swlim/config.hpp>
#include <swlim/linalg.hpp>
#include <swlim/system.hpp>
#include <swlim/signal.hpp>
#include <swlim/classify.hpp>
#include <swlim/simulator.hpp>
#include <swlim/criteria.hpp>
#include <swlim/io.hpp>
