#pragma once

#include "config.hpp"
#include "report.hpp"

namespace smallscat::cli {

/// Runs the configured scenario. Module errors keep their type
/// (ValidationError / NumericalError) with the scenario name prefixed.
RunReport run(const RunConfig& config);

} // namespace smallscat::cli
