// SPDX-License-Identifier: Apache-2.0
#include "flowpinn/network.hpp"

#include <cmath>
#include <random>

#include "flowpinn/errors.hpp"

namespace flowpinn {

LayerSizes default_layer_sizes() { return {2, 20, 50, 100, 100, 200, 200, 100, 50, 20, 3}; }

double Unknown::value() const { return positive ? std::exp(raw) : raw; }

Unknown Unknown::with_value(std::string name, double value, bool positive) {
    if (positive && !(value > 0.0)) {
        throw ConfigError("unknown '" + name + "' is flagged positive but has initial value " +
                          std::to_string(value));
    }
    return {std::move(name), positive ? std::log(value) : value, positive};
}

ParamVector::ParamVector(std::vector<DenseLayer> layers, std::vector<Unknown> unknowns)
    : layers_{std::move(layers)}, unknowns_{std::move(unknowns)} {
    check_shapes();
}

void ParamVector::check_shapes() const {
    if (layers_.empty()) throw ConfigError("network has no layers");
    if (layers_.front().weight.cols() != 2) throw ConfigError("first layer must take 2 inputs (x, y)");
    if (layers_.back().weight.rows() != 3) throw ConfigError("last layer must produce 3 outputs (u, v, p)");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& layer = layers_[l];
        if (layer.bias.size() != layer.weight.rows()) {
            throw ConfigError("bias length mismatch in layer " + std::to_string(l));
        }
        if (l > 0 && layer.weight.cols() != layers_[l - 1].weight.rows()) {
            throw ConfigError("layer " + std::to_string(l) + " does not chain with its predecessor");
        }
    }
}

LayerSizes ParamVector::layer_sizes() const {
    LayerSizes sizes;
    if (layers_.empty()) return sizes;
    sizes.push_back(static_cast<int>(layers_.front().weight.cols()));
    for (const auto& layer : layers_) sizes.push_back(static_cast<int>(layer.weight.rows()));
    return sizes;
}

std::size_t ParamVector::network_size() const {
    std::size_t n = 0;
    for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
    return n;
}

int ParamVector::find_unknown(const std::string& name) const {
    for (std::size_t k = 0; k < unknowns_.size(); ++k) {
        if (unknowns_[k].name == name) return static_cast<int>(k);
    }
    return -1;
}

Eigen::VectorXd ParamVector::flatten() const {
    Eigen::VectorXd flat(size());
    Eigen::Index at = 0;
    for (const auto& layer : layers_) {
        flat.segment(at, layer.weight.size()) = layer.weight.reshaped();
        at += layer.weight.size();
        flat.segment(at, layer.bias.size()) = layer.bias;
        at += layer.bias.size();
    }
    for (const auto& unknown : unknowns_) flat[at++] = unknown.raw;
    return flat;
}

void ParamVector::assign(const Eigen::Ref<const Eigen::VectorXd>& flat) {
    if (static_cast<std::size_t>(flat.size()) != size()) {
        throw ConfigError("flat parameter length " + std::to_string(flat.size()) + " != " +
                          std::to_string(size()));
    }
    Eigen::Index at = 0;
    for (auto& layer : layers_) {
        layer.weight.reshaped() = flat.segment(at, layer.weight.size());
        at += layer.weight.size();
        layer.bias = flat.segment(at, layer.bias.size());
        at += layer.bias.size();
    }
    for (auto& unknown : unknowns_) unknown.raw = flat[at++];
}

bool ParamVector::all_finite() const {
    for (const auto& layer : layers_) {
        if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
    }
    for (const auto& unknown : unknowns_) {
        if (!std::isfinite(unknown.raw)) return false;
    }
    return true;
}

ParamVector init_glorot(const LayerSizes& sizes, std::uint64_t seed) {
    if (sizes.size() < 2) throw ConfigError("layer sizes need at least an input and an output width");
    for (int s : sizes) {
        if (s <= 0) throw ConfigError("layer sizes must be positive");
    }
    if (sizes.front() != 2 || sizes.back() != 3) {
        throw ConfigError("layer sizes must start with 2 (x, y) and end with 3 (u, v, p)");
    }
    std::mt19937_64 rng(seed);
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int fan_in = sizes[l];
        const int fan_out = sizes[l + 1];
        std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / (fan_in + fan_out)));
        DenseLayer layer{Eigen::MatrixXd(fan_out, fan_in), Eigen::VectorXd::Zero(fan_out)};
        for (Eigen::Index k = 0; k < layer.weight.size(); ++k) layer.weight.data()[k] = normal(rng);
        layers.push_back(std::move(layer));
    }
    return ParamVector(std::move(layers));
}

std::array<double, 3> predict(const ParamVector& params, double x, double y) {
    const double xs[] = {x};
    const double ys[] = {y};
    const Eigen::MatrixXd out = predict(params, xs, ys);
    return {out(0, 0), out(1, 0), out(2, 0)};
}

Eigen::MatrixXd predict(const ParamVector& params, std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DataError("coordinate arrays differ in length");
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd h(2, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        h(0, i) = x[i];
        h(1, i) = y[i];
    }
    const auto& layers = params.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        Eigen::MatrixXd a = layers[l].weight * h;
        a.colwise() += layers[l].bias;
        if (l + 1 < layers.size()) {
            h = a.array().tanh().matrix();
        } else {
            h = std::move(a);
        }
    }
    return h;
}

BoundParams bind(ad::Graph& graph, const ParamVector& params, ParamBinding binding) {
    BoundParams bound;
    bound.graph = &graph;
    bound.sizes = params.layer_sizes();
    auto make = [&](double v) {
        if (binding == ParamBinding::Constant) return graph.constant(v);
        ad::Expr var = graph.variable(v);
        bound.flat.push_back(var);
        return var;
    };
    for (const auto& layer : params.layers()) {
        std::vector<ad::Expr> w;
        w.reserve(layer.weight.size());
        for (Eigen::Index k = 0; k < layer.weight.size(); ++k) w.push_back(make(layer.weight.data()[k]));
        std::vector<ad::Expr> b;
        b.reserve(layer.bias.size());
        for (Eigen::Index k = 0; k < layer.bias.size(); ++k) b.push_back(make(layer.bias[k]));
        bound.weight.push_back(std::move(w));
        bound.bias.push_back(std::move(b));
    }
    for (const auto& unknown : params.unknowns()) {
        ad::Expr raw = make(unknown.raw);
        bound.unknowns.push_back(unknown.positive ? ad::exp(raw) : raw);
    }
    return bound;
}

FlowExpr forward(const BoundParams& params, ad::Expr x, ad::Expr y) {
    ad::Graph& g = *params.graph;
    std::vector<ad::Expr> h = {x, y};
    const std::size_t n_layers = params.weight.size();
    for (std::size_t l = 0; l < n_layers; ++l) {
        const int fan_in = params.sizes[l];
        const int fan_out = params.sizes[l + 1];
        std::vector<ad::Expr> next(fan_out);
        for (int j = 0; j < fan_out; ++j) {
            ad::Expr acc = params.bias[l][j];
            for (int k = 0; k < fan_in; ++k) {
                acc = g.add(acc, g.mul(params.weight[l][static_cast<std::size_t>(k) * fan_out + j], h[k]));
            }
            next[j] = (l + 1 < n_layers) ? g.tanh(acc) : acc;
        }
        h = std::move(next);
    }
    return {h[0], h[1], h[2]};
}

AdamState AdamState::zeros(std::size_t n, AdamConfig config) {
    const auto len = static_cast<Eigen::Index>(n);
    return {config, Eigen::VectorXd::Zero(len), Eigen::VectorXd::Zero(len), 0};
}

void adam_step(Eigen::Ref<Eigen::VectorXd> theta, const Eigen::Ref<const Eigen::VectorXd>& grad,
               AdamState& state, double lr) {
    const Eigen::Index n = theta.size();
    if (grad.size() != n || state.first_moment.size() != n || state.second_moment.size() != n) {
        throw ConfigError("optimizer state does not match parameter count");
    }
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    for (Eigen::Index k = 0; k < n; ++k) {
        if (!std::isfinite(grad[k])) throw NonFiniteError("non-finite gradient", static_cast<std::size_t>(k));
    }
    const auto& c = state.config;
    const std::uint64_t step = state.step + 1;
    const double bias1 = 1.0 - std::pow(c.beta1, static_cast<double>(step));
    const double bias2 = 1.0 - std::pow(c.beta2, static_cast<double>(step));
    Eigen::VectorXd m = c.beta1 * state.first_moment + (1.0 - c.beta1) * grad;
    Eigen::VectorXd v = c.beta2 * state.second_moment + (1.0 - c.beta2) * grad.cwiseAbs2();
    Eigen::VectorXd next(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double m_hat = m[k] / bias1;
        const double v_hat = v[k] / bias2;
        next[k] = theta[k] - lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
        if (!std::isfinite(next[k])) {
            throw NonFiniteError("parameter became non-finite", static_cast<std::size_t>(k));
        }
    }
    theta = next;
    state.first_moment = std::move(m);
    state.second_moment = std::move(v);
    state.step = step;
}

void adam_step(ParamVector& params, const Eigen::Ref<const Eigen::VectorXd>& grad, AdamState& state,
               double lr) {
    Eigen::VectorXd theta = params.flatten();
    adam_step(theta, grad, state, lr);
    params.assign(theta);
}

}  // namespace flowpinn
