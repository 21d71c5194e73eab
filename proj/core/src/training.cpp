// SPDX-License-Identifier: Apache-2.0
#include "flowpinn/training.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "flowpinn/data.hpp"
#include "flowpinn/errors.hpp"

namespace flowpinn {

void WeightState::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("weight EMA factor must lie in (0, 1]");
    if (period == 0) throw ConfigError("weight update period must be at least one epoch");
    if (!(std::isfinite(w2) && w2 > 0.0) || !(std::isfinite(w3) && w3 > 0.0)) {
        throw ConfigError("loss weights w2 and w3 must be finite and positive");
    }
    if (!(std::isfinite(w1) && w1 >= 0.0)) throw ConfigError("residual weight must be finite and non-negative");
}

double balance_ratio(std::span<const double> grad_le, std::span<const double> grad_other, BalanceMode mode) {
    if (grad_le.size() != grad_other.size()) throw ConfigError("gradient arrays differ in length");
    if (grad_le.empty()) throw BalancingError("empty gradients");
    double ratio = 0.0;
    if (mode == BalanceMode::RatioOfMeans) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < grad_le.size(); ++i) {
            num += std::abs(grad_le[i]);
            den += std::abs(grad_other[i]);
        }
        if (den == 0.0) throw BalancingError("term gradient is identically zero");
        ratio = num / den;  // the 1/n factors cancel
    } else {
        double sum = 0.0;
        std::size_t used = 0;
        for (std::size_t i = 0; i < grad_le.size(); ++i) {
            if (grad_other[i] == 0.0) continue;
            sum += std::abs(grad_le[i]) / std::abs(grad_other[i]);
            ++used;
        }
        if (used == 0) throw BalancingError("term gradient is identically zero");
        ratio = sum / static_cast<double>(used);
    }
    if (!std::isfinite(ratio)) throw BalancingError("balancing ratio is not finite");
    return ratio;
}

double smooth_weight(double prev, double raw, double alpha) { return (1.0 - alpha) * prev + alpha * raw; }

WeightState adaptive_weights(std::span<const double> grad_le, std::span<const double> grad_lf,
                             std::span<const double> grad_lb, const WeightState& prev, BalanceMode mode) {
    if (grad_lf.size() != grad_lb.size()) throw ConfigError("gradient arrays differ in length");
    WeightState next = prev;
    next.w1 = 1.0;
    next.w2 = smooth_weight(prev.w2, balance_ratio(grad_le, grad_lf, mode), prev.alpha);
    next.w3 = smooth_weight(prev.w3, balance_ratio(grad_le, grad_lb, mode), prev.alpha);
    if (!(next.w2 > 0.0) || !(next.w3 > 0.0)) throw BalancingError("balanced weight is not positive");
    return next;
}

void ScheduleConfig::validate() const {
    if (!(lr_min > 0.0) || !(lr_max > lr_min) || !std::isfinite(lr_max)) {
        throw ConfigError("learning rates need 0 < lr_min < lr_max");
    }
    if (base_cycle == 0) throw ConfigError("base cycle length must be positive");
}

double schedule_lr(const ScheduleState& s) {
    const auto& c = s.config;
    if (s.in_warmup()) {
        return c.lr_min + (c.lr_max - c.lr_min) * static_cast<double>(s.epoch) / static_cast<double>(c.warmup);
    }
    const double phase = static_cast<double>(s.t_cur) / static_cast<double>(s.cycle_length());
    return c.lr_min + 0.5 * (c.lr_max - c.lr_min) * (1.0 + std::cos(std::numbers::pi * phase));
}

void advance(ScheduleState& s) {
    const bool was_warmup = s.in_warmup();
    ++s.epoch;
    if (was_warmup) return;
    if (s.t_cur == s.cycle_length()) {
        ++s.cycle;
        s.t_cur = 0;
    } else {
        ++s.t_cur;
    }
}

ScheduleState schedule_at(std::size_t epoch, const ScheduleConfig& config) {
    ScheduleState s;
    s.config = config;
    s.epoch = epoch;
    if (epoch < config.warmup) return s;
    std::size_t rest = epoch - config.warmup;
    while (rest > s.cycle_length()) {
        rest -= s.cycle_length() + 1;
        ++s.cycle;
    }
    s.t_cur = rest;
    return s;
}

std::size_t epochs_through_cycle(std::size_t cycles, const ScheduleConfig& config) {
    std::size_t total = config.warmup;
    for (std::size_t i = 1; i <= cycles; ++i) total += (config.base_cycle << i) + 1;
    return total;
}

void TrainConfig::validate() const {
    if (!fixed_lr) {
        schedule.validate();
        if (epochs > 0 && epochs < schedule.warmup) throw ConfigError("epochs must cover the warmup");
    } else if (!(*fixed_lr > 0.0)) {
        throw ConfigError("fixed learning rate must be positive");
    }
    initial_weights.validate();
    if (progress_every == 0) throw ConfigError("progress interval must be positive");
}

TrainResult train(const ProblemSpec& problem, const TrainConfig& config) {
    config.validate();
    require_valid(problem);
    ParamVector params = initial_params(problem, config.layers, config.seed);
    AdamState optimizer = AdamState::zeros(params.size(), config.adam);
    return train(problem, config, std::move(params), std::move(optimizer));
}

namespace {

void check_finite(const LossBreakdown& t, std::size_t epoch) {
    const std::pair<const char*, double> terms[] = {{"residual", t.residual}, {"labeled", t.labeled},
                                                    {"inlet", t.inlet},       {"outlet", t.outlet},
                                                    {"wall", t.wall},         {"periodic", t.periodic}};
    for (const auto& [name, value] : terms) {
        if (!std::isfinite(value)) throw DivergenceError(epoch, name);
    }
}

std::span<const double> view(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

TrainResult train(const ProblemSpec& problem, const TrainConfig& config, ParamVector params, AdamState optimizer) {
    config.validate();
    ProblemSpec spec = problem;
    const bool ablate = config.ablate_dnn || problem.ablate_dnn;
    if (ablate) {
        spec.ablate_dnn = true;
        spec.active.residual = false;
    }
    require_valid(spec);
    if (optimizer.first_moment.size() != static_cast<Eigen::Index>(params.size())) {
        throw ConfigError("optimizer state does not match the parameter count");
    }

    WeightState weights = config.initial_weights;
    if (ablate) {
        weights.w1 = 0.0;
        weights.w2 = 1.0;
        weights.w3 = 1.0;
    }
    ScheduleState schedule;
    schedule.config = config.schedule;

    TrainResult result;
    result.history.reserve(config.epochs);
    const PointSet& residual = spec.data->residual;
    const bool minibatch = config.residual_batch > 0 && config.residual_batch < residual.size();

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        PointSet batch;
        if (minibatch) {
            batch = sample_without_replacement(residual, config.residual_batch, config.seed + 7919 * (epoch + 1));
        }
        ObjectiveValues obj = evaluate_objective(spec, params, true, minibatch ? &batch : nullptr);
        check_finite(obj.terms, epoch);

        if (config.adaptive && !ablate && spec.active.residual && epoch % weights.period == 0) {
            // Terms whose gradient vanished (or are inactive) keep their weight.
            if (spec.active.labeled) {
                try {
                    const double raw = balance_ratio(view(obj.grad_residual), view(obj.grad_labeled), config.balance);
                    weights.w2 = smooth_weight(weights.w2, raw, weights.alpha);
                } catch (const BalancingError&) {
                }
            }
            if (spec.active.any_boundary()) {
                try {
                    const double raw = balance_ratio(view(obj.grad_residual), view(obj.grad_boundary), config.balance);
                    weights.w3 = smooth_weight(weights.w3, raw, weights.alpha);
                } catch (const BalancingError&) {
                }
            }
        }

        LossBreakdown loss = obj.terms;
        loss.w_residual = weights.w1;
        loss.w_labeled = weights.w2;
        loss.w_boundary = weights.w3;
        loss.total = total_loss(loss, {weights.w1, weights.w2, weights.w3});
        if (!std::isfinite(loss.total)) throw DivergenceError(epoch, "total");

        const double lr = config.fixed_lr ? *config.fixed_lr : schedule_lr(schedule);
        result.history.push_back({epoch, lr, loss});

        Eigen::VectorXd grad = weights.w2 * obj.grad_labeled + weights.w3 * obj.grad_boundary;
        if (weights.w1 != 0.0) grad += weights.w1 * obj.grad_residual;
        try {
            adam_step(params, grad, optimizer, lr);
        } catch (const NonFiniteError&) {
            throw DivergenceError(epoch, "gradient");
        }
        advance(schedule);

        if (config.progress && (epoch + 1) % config.progress_every == 0) {
            std::ostringstream line;
            line << "epoch " << epoch + 1 << " lr " << lr << " total " << loss.total;
            config.progress(line.str());
        }
    }

    ObjectiveValues last = evaluate_objective(spec, params, false);
    result.final_loss = last.terms;
    result.final_loss.w_residual = weights.w1;
    result.final_loss.w_labeled = weights.w2;
    result.final_loss.w_boundary = weights.w3;
    result.final_loss.total = total_loss(result.final_loss, {weights.w1, weights.w2, weights.w3});
    result.params = std::move(params);
    result.optimizer = std::move(optimizer);
    result.weights = weights;
    return result;
}

std::string format_history(std::span<const HistoryRow> history) {
    std::ostringstream out;
    out << "epoch,lr,w1,w2,w3,residual,labeled,inlet,outlet,wall,periodic,total\n";
    for (const auto& r : history) {
        const auto& l = r.loss;
        out << r.epoch;
        for (double v : {r.lr, l.w_residual, l.w_labeled, l.w_boundary, l.residual, l.labeled, l.inlet, l.outlet,
                         l.wall, l.periodic, l.total}) {
            out << ',' << format_double(v);
        }
        out << '\n';
    }
    return out.str();
}

void write_history(const std::string& path, std::span<const HistoryRow> history) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write history to " + path);
    out << format_history(history);
    if (!out) throw DataError("failed writing history to " + path);
}

}  // namespace flowpinn
