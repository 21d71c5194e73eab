// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flowpinn/autodiff.hpp"

namespace flowpinn {

using LayerSizes = std::vector<int>;

/// [2, 20, 50, 100, 100, 200, 200, 100, 50, 20, 3]
LayerSizes default_layer_sizes();

struct DenseLayer {
    Eigen::MatrixXd weight;  // fan_out x fan_in
    Eigen::VectorXd bias;
};

/// Extra trainable scalar for inverse problems. With `positive` set the
/// stored value is log(value) and `value()` applies exp.
struct Unknown {
    std::string name;
    double raw = 0.0;
    bool positive = false;

    double value() const;
    static Unknown with_value(std::string name, double value, bool positive);
};

/// All trainable state: dense layers mapping (x, y) to (u, v, p), plus the
/// inverse-problem unknowns. The flat ordering used by gradients and the
/// optimizer is layer by layer, weights column-major then bias, followed by
/// the raw unknowns.
class ParamVector {
  public:
    ParamVector() = default;
    ParamVector(std::vector<DenseLayer> layers, std::vector<Unknown> unknowns = {});

    const std::vector<DenseLayer>& layers() const { return layers_; }
    std::vector<DenseLayer>& layers() { return layers_; }
    const std::vector<Unknown>& unknowns() const { return unknowns_; }
    std::vector<Unknown>& unknowns() { return unknowns_; }

    LayerSizes layer_sizes() const;
    std::size_t network_size() const;
    std::size_t size() const { return network_size() + unknowns_.size(); }

    /// Index of the named unknown, or -1.
    int find_unknown(const std::string& name) const;
    /// Flat index of unknown `k`.
    std::size_t unknown_offset(std::size_t k) const { return network_size() + k; }

    Eigen::VectorXd flatten() const;
    void assign(const Eigen::Ref<const Eigen::VectorXd>& flat);
    bool all_finite() const;

  private:
    void check_shapes() const;

    std::vector<DenseLayer> layers_;
    std::vector<Unknown> unknowns_;
};

/// Normal(0, 2 / (fan_in + fan_out)) weights, zero biases.
ParamVector init_glorot(const LayerSizes& sizes, std::uint64_t seed);

/// Plain numeric forward pass for one point.
std::array<double, 3> predict(const ParamVector& params, double x, double y);

/// Batched forward pass; returns a 3 x n matrix with rows u, v, p.
Eigen::MatrixXd predict(const ParamVector& params, std::span<const double> x, std::span<const double> y);

struct FlowExpr {
    ad::Expr u, v, p;
};

enum class ParamBinding {
    Constant,  // parameters folded into the graph as constants
    Variable,  // parameters become variables so loss gradients can be taken
};

/// Network parameters placed into an expression graph.
struct BoundParams {
    ad::Graph* graph = nullptr;
    std::vector<std::vector<ad::Expr>> weight;  // per layer, column-major like the flat order
    std::vector<std::vector<ad::Expr>> bias;
    std::vector<ad::Expr> unknowns;  // already mapped through exp when positive
    std::vector<ad::Expr> flat;      // variables in flat order (empty for Constant binding)
    LayerSizes sizes;
};

BoundParams bind(ad::Graph& graph, const ParamVector& params, ParamBinding binding);

/// Builds the network's outputs as expressions of the input nodes x, y.
/// Hidden layers use tanh; the output layer is affine.
FlowExpr forward(const BoundParams& params, ad::Expr x, ad::Expr y);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamConfig config;
    Eigen::VectorXd first_moment;
    Eigen::VectorXd second_moment;
    std::uint64_t step = 0;

    static AdamState zeros(std::size_t n, AdamConfig config = {});
};

/// One bias-corrected adaptive-moment update of `theta` in place.
/// Throws NonFiniteError for a non-finite gradient or resulting parameter.
void adam_step(Eigen::Ref<Eigen::VectorXd> theta, const Eigen::Ref<const Eigen::VectorXd>& grad,
               AdamState& state, double lr);

void adam_step(ParamVector& params, const Eigen::Ref<const Eigen::VectorXd>& grad, AdamState& state,
               double lr);

}  // namespace flowpinn
