#pragma once

#include "dirac3/errors.hpp"
#include "dirac3/spinor.hpp"
#include "dirac3/torus.hpp"
#include "dirac3/eigensolver.hpp"
#include "dirac3/conformal.hpp"
#include "dirac3/perturbation.hpp"
#include "dirac3/experiments.hpp"
#include "dirac3/io.hpp"
#include "dirac3/validation.hpp"
