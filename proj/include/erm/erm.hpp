#pragma once

#include "erm/cloud.hpp"
#include "erm/decay_matrix.hpp"
#include "erm/eigenvectors.hpp"
#include "erm/ensemble.hpp"
#include "erm/entry_moments.hpp"
#include "erm/errors.hpp"
#include "erm/experiment.hpp"
#include "erm/fractal.hpp"
#include "erm/histogram.hpp"
#include "erm/random.hpp"
#include "erm/scan.hpp"
#include "erm/spectrum.hpp"
#include "erm/stats.hpp"
#include "erm/surmise.hpp"
#include "erm/triangle.hpp"
#include "erm/unfolding.hpp"
