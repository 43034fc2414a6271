#pragma once

#include "config.hpp"
#include "laurent.hpp"
#include "roots.hpp"
#include "rational.hpp"
#include "whf.hpp"
#include "hardy.hpp"
#include "model.hpp"
#include "solver.hpp"
#include "regularizer.hpp"
#include "likelihood.hpp"
#include "io.hpp"
