// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "flowpinn/metrics.hpp"
#include "flowpinn/run_config.hpp"
#include "flowpinn/training.hpp"

namespace flowpinn::cli {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kConfigError = 2,
    kDataError = 3,
    kDiverged = 4,
};

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Output directory: the explicit value, else $FLOWPINN_OUTPUT_DIR, else ./flowpinn-run.
std::filesystem::path output_dir(const std::string& requested);

struct TrainedRun {
    TrainResult result;
    RunSetup setup;
    std::map<std::string, std::string> artifacts;
};

/// Prepares data, trains and writes checkpoint, history and manifest into
/// `dir`. Nothing is written when preparation or training fails.
TrainedRun train_and_save(const RunConfig& config, const std::filesystem::path& dir, const std::string& command,
                          std::ostream& progress);

/// Metrics of a trained network against the config's reference field.
MetricsReport evaluate_run(const ParamVector& params, const RunConfig& config, const PointSet& reference);

}  // namespace flowpinn::cli
