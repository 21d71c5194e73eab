// SPDX-License-Identifier: Apache-2.0
#include "flowpinn/jet_network.hpp"

#include "flowpinn/errors.hpp"

namespace flowpinn {

namespace {

constexpr Eigen::Index kValue = 0;
constexpr Eigen::Index kDx = 1;
constexpr Eigen::Index kDy = 2;
constexpr Eigen::Index kDxx = 3;
constexpr Eigen::Index kDyy = 4;

Eigen::Index channel_count(JetOrder order) { return order == JetOrder::Value ? 1 : 5; }

}  // namespace

Jets Jets::zeros_like(const Jets& other) {
    Jets z;
    auto zero = [](const Eigen::MatrixXd& m) { return Eigen::MatrixXd::Zero(m.rows(), m.cols()); };
    z.value = zero(other.value);
    z.dx = zero(other.dx);
    z.dy = zero(other.dy);
    z.dxx = zero(other.dxx);
    z.dyy = zero(other.dyy);
    return z;
}

JetPass::JetPass(const ParamVector& params, std::span<const double> x, std::span<const double> y,
                 JetOrder order)
    : params_{&params},
      order_{order},
      n_{static_cast<Eigen::Index>(x.size())},
      channels_{channel_count(order)} {
    if (x.size() != y.size()) throw DataError("coordinate arrays differ in length");
    const Eigen::Index n = n_;
    const Eigen::Index c = channels_;

    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, c * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        h(0, i) = x[i];
        h(1, i) = y[i];
    }
    if (c > 1) {
        h.row(0).segment(kDx * n, n).setOnes();
        h.row(1).segment(kDy * n, n).setOnes();
    }

    const auto& layers = params.layers();
    const std::size_t hidden = layers.size() - 1;
    inputs_.reserve(layers.size());
    pre_.reserve(hidden);
    for (std::size_t l = 0; l < hidden; ++l) {
        Eigen::MatrixXd a = layers[l].weight * h;
        a.leftCols(n).colwise() += layers[l].bias;
        inputs_.push_back(std::move(h));

        h.resize(a.rows(), c * n);
        auto t = h.leftCols(n).array();
        t = a.leftCols(n).array().tanh();
        if (c > 1) {
            const Eigen::ArrayXXd s = 1.0 - t.square();
            const Eigen::ArrayXXd q = -2.0 * t * s;
            const auto ax = a.middleCols(kDx * n, n).array();
            const auto ay = a.middleCols(kDy * n, n).array();
            h.middleCols(kDx * n, n).array() = s * ax;
            h.middleCols(kDy * n, n).array() = s * ay;
            h.middleCols(kDxx * n, n).array() = s * a.middleCols(kDxx * n, n).array() + q * ax.square();
            h.middleCols(kDyy * n, n).array() = s * a.middleCols(kDyy * n, n).array() + q * ay.square();
        }
        pre_.push_back(std::move(a));
    }

    Eigen::MatrixXd a = layers.back().weight * h;
    a.leftCols(n).colwise() += layers.back().bias;
    inputs_.push_back(std::move(h));

    out_.value = a.leftCols(n);
    if (c > 1) {
        out_.dx = a.middleCols(kDx * n, n);
        out_.dy = a.middleCols(kDy * n, n);
        out_.dxx = a.middleCols(kDxx * n, n);
        out_.dyy = a.middleCols(kDyy * n, n);
    }
}

void JetPass::backward(const Jets& adjoint, Eigen::Ref<Eigen::VectorXd> grad) const {
    const Eigen::Index n = n_;
    const Eigen::Index c = channels_;
    const auto& layers = params_->layers();
    if (adjoint.value.rows() != 3 || adjoint.value.cols() != n) {
        throw ConfigError("jet adjoint does not match the forward batch");
    }
    if (static_cast<std::size_t>(grad.size()) < params_->network_size()) {
        throw ConfigError("gradient buffer shorter than the network parameter count");
    }

    std::vector<Eigen::Index> offset(layers.size());
    Eigen::Index at = 0;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        offset[l] = at;
        at += layers[l].weight.size() + layers[l].bias.size();
    }

    Eigen::MatrixXd g(3, c * n);
    g.leftCols(n) = adjoint.value;
    if (c > 1) {
        if (adjoint.dx.cols() != n || adjoint.dxx.cols() != n) {
            throw ConfigError("jet adjoint is missing derivative channels");
        }
        g.middleCols(kDx * n, n) = adjoint.dx;
        g.middleCols(kDy * n, n) = adjoint.dy;
        g.middleCols(kDxx * n, n) = adjoint.dxx;
        g.middleCols(kDyy * n, n) = adjoint.dyy;
    }

    for (std::size_t li = layers.size(); li-- > 0;) {
        const auto& layer = layers[li];
        const Eigen::MatrixXd& input = inputs_[li];
        const Eigen::Index wsize = layer.weight.size();
        grad.segment(offset[li], wsize).reshaped(layer.weight.rows(), layer.weight.cols()) +=
            g * input.transpose();
        grad.segment(offset[li] + wsize, layer.bias.size()) += g.leftCols(n).rowwise().sum();
        if (li == 0) break;

        // Adjoint of the previous layer's activations, then through tanh.
        const Eigen::MatrixXd hbar = layer.weight.transpose() * g;
        const Eigen::MatrixXd& a = pre_[li - 1];
        const auto t = input.leftCols(n).array();
        const Eigen::ArrayXXd s = 1.0 - t.square();
        g.resize(a.rows(), c * n);
        if (c == 1) {
            g.array() = hbar.array() * s;
            continue;
        }
        const Eigen::ArrayXXd q = -2.0 * t * s;
        const Eigen::ArrayXXd r = -2.0 * s * (s - 2.0 * t.square());
        const auto ax = a.middleCols(kDx * n, n).array();
        const auto ay = a.middleCols(kDy * n, n).array();
        const auto axx = a.middleCols(kDxx * n, n).array();
        const auto ayy = a.middleCols(kDyy * n, n).array();
        const auto b0 = hbar.leftCols(n).array();
        const auto bx = hbar.middleCols(kDx * n, n).array();
        const auto by = hbar.middleCols(kDy * n, n).array();
        const auto bxx = hbar.middleCols(kDxx * n, n).array();
        const auto byy = hbar.middleCols(kDyy * n, n).array();

        g.leftCols(n).array() = b0 * s + q * (ax * bx + ay * by + axx * bxx + ayy * byy) +
                                r * (ax.square() * bxx + ay.square() * byy);
        g.middleCols(kDx * n, n).array() = s * bx + 2.0 * q * ax * bxx;
        g.middleCols(kDy * n, n).array() = s * by + 2.0 * q * ay * byy;
        g.middleCols(kDxx * n, n).array() = s * bxx;
        g.middleCols(kDyy * n, n).array() = s * byy;
    }
}

}  // namespace flowpinn
