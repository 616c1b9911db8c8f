#pragma once

#include "mixspec/array_sim.hpp"
#include "mixspec/cov_estimation.hpp"
#include "mixspec/errors.hpp"
#include "mixspec/fejer.hpp"
#include "mixspec/json_io.hpp"
#include "mixspec/montecarlo.hpp"
#include "mixspec/quadrature.hpp"
#include "mixspec/random.hpp"
#include "mixspec/signal_models.hpp"
#include "mixspec/spectra.hpp"
#include "mixspec/variance_theory.hpp"

namespace mixspec {
inline constexpr const char* kVersion = "0.1.0";
}
