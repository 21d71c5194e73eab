// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "flowpinn/network.hpp"

namespace flowpinn {

/// How many input-derivative channels a batched pass carries.
enum class JetOrder {
    Value,   // outputs only
    Second,  // outputs, d/dx, d/dy, d2/dx2, d2/dy2
};

/// Network outputs over a batch. Each matrix is 3 x n with rows u, v, p.
/// Derivative matrices are empty for JetOrder::Value.
struct Jets {
    Eigen::MatrixXd value, dx, dy, dxx, dyy;

    static Jets zeros_like(const Jets& other);
};

/// Batched network evaluation that propagates input derivatives alongside
/// the values (a truncated Taylor jet in x and y separately), and the
/// matching reverse pass that turns output adjoints into parameter
/// gradients. All derivative channels share the hidden-layer matrix
/// products, stacked column-wise as [value | dx | dy | dxx | dyy].
///
/// This is the training route; the expression-graph route in autodiff.hpp
/// computes the same quantities one scalar at a time and is used to check it.
class JetPass {
  public:
    JetPass(const ParamVector& params, std::span<const double> x, std::span<const double> y, JetOrder order);

    const Jets& outputs() const { return out_; }
    Eigen::Index batch() const { return n_; }

    /// Adds d(loss)/d(theta) to `grad` (network part of the flat order) given
    /// d(loss)/d(outputs). `adjoint` must have the same channels as outputs().
    void backward(const Jets& adjoint, Eigen::Ref<Eigen::VectorXd> grad) const;

  private:
    const ParamVector* params_;
    JetOrder order_;
    Eigen::Index n_;
    Eigen::Index channels_;
    std::vector<Eigen::MatrixXd> inputs_;  // stacked input to each layer
    std::vector<Eigen::MatrixXd> pre_;     // stacked pre-activation of each hidden layer
    Jets out_;
};

}  // namespace flowpinn
