// SPDX-License-Identifier: Apache-2.0
//
// Umbrella header for the nanonmr library.
#pragma once

#include "nanonmr/autocorrelation.hpp"
#include "nanonmr/diagnostics.hpp"
#include "nanonmr/envelope.hpp"
#include "nanonmr/errors.hpp"
#include "nanonmr/estimation.hpp"
#include "nanonmr/export.hpp"
#include "nanonmr/fft.hpp"
#include "nanonmr/fitting.hpp"
#include "nanonmr/io.hpp"
#include "nanonmr/mc_oracle.hpp"
#include "nanonmr/measurement.hpp"
#include "nanonmr/noise.hpp"
#include "nanonmr/optimize.hpp"
#include "nanonmr/parallel.hpp"
#include "nanonmr/periodogram.hpp"
#include "nanonmr/pipeline.hpp"
#include "nanonmr/presets.hpp"
#include "nanonmr/qdyne.hpp"
#include "nanonmr/random.hpp"
#include "nanonmr/special_functions.hpp"
#include "nanonmr/spectral.hpp"
