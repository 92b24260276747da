#pragma once

#include "carscore/error.hpp"
#include "carscore/linalg.hpp"
#include "carscore/special.hpp"
#include "carscore/rng.hpp"
#include "carscore/parallel.hpp"
#include "carscore/estimation.hpp"
#include "carscore/car.hpp"
#include "carscore/inference.hpp"
#include "carscore/regress.hpp"
#include "carscore/selection.hpp"
#include "carscore/model_io.hpp"
#include "carscore/simulate.hpp"
#include "carscore/csv.hpp"
