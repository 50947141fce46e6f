#pragma once

#include "qwd/autodiff.hpp"
#include "qwd/casestudy.hpp"
#include "qwd/dsop.hpp"
#include "qwd/engine.hpp"
#include "qwd/errors.hpp"
#include "qwd/estimator.hpp"
#include "qwd/layout.hpp"
#include "qwd/linalg.hpp"
#include "qwd/mu.hpp"
#include "qwd/optimizer.hpp"
#include "qwd/parser.hpp"
#include "qwd/program.hpp"
#include "qwd/random.hpp"
#include "qwd/sim.hpp"
