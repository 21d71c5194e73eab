// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "flowpinn/data.hpp"
#include "flowpinn/metrics.hpp"
#include "flowpinn/problems.hpp"
#include "flowpinn/training.hpp"

namespace flowpinn {

/// Everything a run needs, as read from a plain-text problem file of
/// `key = value` lines ('#' starts a comment). See `apply_setting` for keys.
struct RunConfig {
    std::string problem = "kovasznay";  // or "files"
    ProblemMode mode = ProblemMode::Forward;
    ManufacturedDomain domain;
    FileSources files;
    Scales scales;
    std::optional<double> density;
    std::optional<double> viscosity;  // defaults to 1/Re for kovasznay
    ViscousSign sign = ViscousSign::Standard;
    bool pressure_periodic = false;
    bool inverse_wall_no_slip = false;
    std::vector<UnknownDecl> unknowns;

    std::uint64_t seed = 1234;
    std::uint64_t data_seed = 1234;
    LayerSizes layers = default_layer_sizes();
    std::optional<std::size_t> epochs;
    std::size_t cycles = 3;  // used when `epochs` is unset
    ScheduleConfig schedule;
    std::size_t weight_period = 10;
    double weight_ema = 0.9;
    BalanceMode weight_mode = BalanceMode::RatioOfMeans;
    bool adaptive = true;
    bool ablate_dnn = false;
    std::size_t residual_batch = 0;

    double noise_level = 0.0;
    std::uint64_t noise_seed = 99;
    NoiseReference noise_reference;

    RelativeMode relative_mode = RelativeMode::MeanSquare;
    std::size_t grid_nx = 101, grid_ny = 101;
    std::string reference;  // optional reference point file for evaluation

    std::size_t total_epochs() const;
};

/// Sets one key. Throws ConfigError naming the key on unknown keys or bad values.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// Reads `key = value` lines into `config` (later lines win).
void parse_run_config(RunConfig& config, const std::string& text, const std::string& origin = "<text>");
RunConfig load_run_config(const std::string& path);

/// Canonical key = value text; parsing it reproduces the same config.
std::string format_run_config(const RunConfig& config);

BundleConfig bundle_config(const RunConfig& config);
ProblemOptions problem_options(const RunConfig& config);
TrainConfig train_config(const RunConfig& config);

/// Dataset, problem and training settings derived from a config. Label
/// noise, when requested, is applied to the labeled set only.
struct RunSetup {
    std::shared_ptr<DatasetBundle> bundle;
    ProblemSpec problem;
    TrainConfig train;
};

RunSetup prepare_run(const RunConfig& config);

/// Reference field for evaluation: the analytic solution on the evaluation
/// grid for kovasznay, otherwise the reference file (empty when none).
PointSet reference_field(const RunConfig& config);

}  // namespace flowpinn
