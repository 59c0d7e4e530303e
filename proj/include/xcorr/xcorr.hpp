#pragma once

#include "xcorr/calibration.hpp"
#include "xcorr/cli.hpp"
#include "xcorr/common.hpp"
#include "xcorr/correlators.hpp"
#include "xcorr/csv.hpp"
#include "xcorr/metrics.hpp"
#include "xcorr/parallel.hpp"
#include "xcorr/price.hpp"
#include "xcorr/rng.hpp"
#include "xcorr/sampling.hpp"
#include "xcorr/wht.hpp"
