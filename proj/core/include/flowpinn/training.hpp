// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowpinn/losses.hpp"
#include "flowpinn/network.hpp"
#include "flowpinn/problems.hpp"

namespace flowpinn {

// ---------------------------------------------------------------------------
// Adaptive loss weights
// ---------------------------------------------------------------------------

enum class BalanceMode {
    RatioOfMeans,  // mean|gLe| / mean|gLf|
    MeanOfRatios,  // mean(|gLe| / |gLf|), entries with |gLf| == 0 skipped
};

struct WeightState {
    double w1 = 1.0;
    double w2 = 1.0;
    double w3 = 1.0;
    double alpha = 0.9;       // EMA factor on the fresh estimate
    std::size_t period = 10;  // epochs between updates

    void validate() const;
};

/// Raw balancing ratio between the residual gradient and another term's.
/// Throws BalancingError when the denominator term carries no gradient.
double balance_ratio(std::span<const double> grad_le, std::span<const double> grad_other,
                     BalanceMode mode = BalanceMode::RatioOfMeans);

/// (1 - alpha) * prev + alpha * raw
double smooth_weight(double prev, double raw, double alpha);

/// Both ratios at once. Throws BalancingError if either grad_lf or grad_lb is
/// identically zero; the returned state keeps w1 = 1.
WeightState adaptive_weights(std::span<const double> grad_le, std::span<const double> grad_lf,
                             std::span<const double> grad_lb, const WeightState& prev,
                             BalanceMode mode = BalanceMode::RatioOfMeans);

// ---------------------------------------------------------------------------
// Learning-rate schedule: linear warmup, then cosine decay with restarts
// whose i-th cycle spans T^i = base * 2^i epochs (i from 1).
// ---------------------------------------------------------------------------

struct ScheduleConfig {
    double lr_min = 1e-7;
    double lr_max = 1e-3;
    std::size_t warmup = 10;
    std::size_t base_cycle = 100;

    void validate() const;
};

/// Each cycle visits T_cur = 0..T^i inclusive, so its last epoch runs at
/// exactly lr_min and the following one restarts at lr_max.
struct ScheduleState {
    std::size_t epoch = 0;
    std::size_t cycle = 1;
    std::size_t t_cur = 0;
    ScheduleConfig config;

    bool in_warmup() const { return epoch < config.warmup; }
    std::size_t cycle_length() const { return config.base_cycle << cycle; }
};

double schedule_lr(const ScheduleState& state);
/// One epoch forward.
void advance(ScheduleState& state);
/// Direct construction of the state reached after `epoch` advances.
ScheduleState schedule_at(std::size_t epoch, const ScheduleConfig& config);
/// Epoch count that ends exactly on the last epoch of cycle `cycles`.
std::size_t epochs_through_cycle(std::size_t cycles, const ScheduleConfig& config);

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct TrainConfig {
    std::size_t epochs = 0;
    std::uint64_t seed = 1234;
    LayerSizes layers = default_layer_sizes();
    bool ablate_dnn = false;
    bool adaptive = true;  // false: weights stay at `initial_weights`
    WeightState initial_weights;
    BalanceMode balance = BalanceMode::RatioOfMeans;
    ScheduleConfig schedule;
    std::optional<double> fixed_lr;   // bypasses the schedule
    std::size_t residual_batch = 0;   // 0: full batch; otherwise resample each epoch
    AdamConfig adam;
    std::size_t progress_every = 100;
    std::function<void(const std::string&)> progress;  // receives one line per report

    void validate() const;
};

struct HistoryRow {
    std::size_t epoch = 0;
    double lr = 0.0;
    LossBreakdown loss;  // before the epoch's optimizer step
};

struct TrainResult {
    ParamVector params;
    AdamState optimizer;
    std::vector<HistoryRow> history;
    LossBreakdown final_loss;  // after the last step, with the last weights
    WeightState weights;
};

TrainResult train(const ProblemSpec& problem, const TrainConfig& config);
/// Continues from given parameters and optimizer state.
TrainResult train(const ProblemSpec& problem, const TrainConfig& config, ParamVector params, AdamState optimizer);

void write_history(const std::string& path, std::span<const HistoryRow> history);
std::string format_history(std::span<const HistoryRow> history);

}  // namespace flowpinn
