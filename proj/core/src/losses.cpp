// SPDX-License-Identifier: Apache-2.0
#include "flowpinn/losses.hpp"

#include <array>
#include <cmath>
#include <string>

#include "flowpinn/errors.hpp"
#include "flowpinn/jet_network.hpp"

namespace flowpinn {

double mse(std::span<const double> pred, std::span<const double> target) {
    if (pred.size() != target.size()) throw DataError("mse: length mismatch");
    if (pred.empty()) throw DataError("mse: empty input");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        sum += d * d;
    }
    return sum / static_cast<double>(pred.size());
}

void Weights::validate() const {
    for (double w : {residual, labeled, boundary}) {
        if (!std::isfinite(w) || w < 0.0) throw ConfigError("loss weights must be finite and non-negative");
    }
}

void check_inlet(const PointSet& inlet) {
    if (inlet.count(Field::U) != inlet.size() || inlet.count(Field::V) != inlet.size()) {
        throw ConfigError("inlet boundary needs u and v labels at every point");
    }
}

void check_outlet(const PointSet& outlet) {
    if (outlet.count(Field::P) != outlet.size()) {
        throw ConfigError("outlet boundary needs a p label at every point");
    }
}

void check_labeled(const PointSet& labeled) {
    for (std::size_t i = 0; i < labeled.size(); ++i) {
        if (!labeled.has(Field::U, i) && !labeled.has(Field::V, i) && !labeled.has(Field::P, i)) {
            throw DataError("labeled point " + std::to_string(i) + " has no available field");
        }
    }
}

namespace {

/// Which fields a data term fits and what it fits them to.
struct FitSpec {
    std::array<bool, 3> fields{};
    bool zero_when_unlabeled = false;  // wall: unlabeled entries target 0
};

std::array<ad::Expr, 3> as_array(const FlowExpr& f) { return {f.u, f.v, f.p}; }

ad::Expr fit_loss(const BoundParams& params, const PointSet& points, const FitSpec& spec) {
    ad::Graph& g = *params.graph;
    std::array<ad::Expr, 3> sums = {g.zero(), g.zero(), g.zero()};
    std::array<std::size_t, 3> counts{};
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto out = as_array(forward(params, g.constant(points.x[i]), g.constant(points.y[i])));
        for (int k = 0; k < 3; ++k) {
            if (!spec.fields[k]) continue;
            const bool labeled = points.mask[k][i] != 0;
            if (!labeled && !spec.zero_when_unlabeled) continue;
            const double target = labeled ? points.label[k][i] : 0.0;
            const ad::Expr d = out[k] - target;
            sums[k] = sums[k] + d * d;
            ++counts[k];
        }
    }
    ad::Expr total = g.zero();
    for (int k = 0; k < 3; ++k) {
        if (counts[k] > 0) total = total + sums[k] / static_cast<double>(counts[k]);
    }
    return total;
}

TermValue fit_term(const ParamVector& params, const PointSet& points, const FitSpec& spec, bool with_grad) {
    TermValue result;
    if (with_grad) result.grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.size()));
    if (points.empty()) return result;
    const JetPass pass(params, points.x, points.y, JetOrder::Value);
    const Eigen::MatrixXd& pred = pass.outputs().value;
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd diff = Eigen::MatrixXd::Zero(3, n);
    std::array<std::size_t, 3> counts{};
    for (int k = 0; k < 3; ++k) {
        if (!spec.fields[k]) continue;
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool labeled = points.mask[k][i] != 0;
            if (!labeled && !spec.zero_when_unlabeled) continue;
            const double target = labeled ? points.label[k][i] : 0.0;
            diff(k, i) = pred(k, i) - target;
            ++counts[k];
        }
    }
    Eigen::MatrixXd scale = Eigen::MatrixXd::Zero(3, 1);
    for (int k = 0; k < 3; ++k) {
        if (counts[k] == 0) continue;
        scale(k, 0) = 1.0 / static_cast<double>(counts[k]);
        result.value += diff.row(k).squaredNorm() * scale(k, 0);
    }
    if (with_grad) {
        Jets adjoint;
        adjoint.value = 2.0 * (diff.array().colwise() * scale.col(0).array()).matrix();
        pass.backward(adjoint, result.grad);
    }
    return result;
}

constexpr FitSpec kLabeledSpec{{true, true, true}, false};
constexpr FitSpec kInletSpec{{true, true, false}, false};
constexpr FitSpec kOutletSpec{{false, false, true}, false};
constexpr FitSpec kWallSpec{{true, true, false}, true};

}  // namespace

ad::Expr residual_loss(const BoundParams& params, const PointSet& points, const ResidualModel& model) {
    if (points.empty()) throw DataError("residual point set is empty");
    ad::Graph& g = *params.graph;
    ad::Expr laminar = g.constant(model.constants.viscosity);
    if (model.viscosity_unknown >= 0) {
        if (static_cast<std::size_t>(model.viscosity_unknown) >= params.unknowns.size()) {
            throw ConfigError("viscosity unknown index out of range");
        }
        laminar = params.unknowns[static_cast<std::size_t>(model.viscosity_unknown)];
    }
    ad::Expr sum = g.zero();
    for (std::size_t i = 0; i < points.size(); ++i) {
        const ad::Expr x = g.variable(points.x[i]);
        const ad::Expr y = g.variable(points.y[i]);
        const FlowExpr flow = forward(params, x, y);
        const ad::Expr nu = points.has_nu_eff() ? g.constant(points.nu_eff[i]) : laminar;
        const ResidualTriple r = ns_residual(flow, x, y, nu, model.constants, model.sign);
        sum = sum + (r.mass * r.mass + r.xmom * r.xmom + r.ymom * r.ymom);
    }
    return sum / static_cast<double>(points.size());
}

ad::Expr labeled_loss(const BoundParams& params, const PointSet& points) {
    check_labeled(points);
    return fit_loss(params, points, kLabeledSpec);
}

ad::Expr inlet_loss(const BoundParams& params, const PointSet& inlet) {
    check_inlet(inlet);
    return fit_loss(params, inlet, kInletSpec);
}

ad::Expr outlet_loss(const BoundParams& params, const PointSet& outlet) {
    check_outlet(outlet);
    return fit_loss(params, outlet, kOutletSpec);
}

ad::Expr wall_loss(const BoundParams& params, const PointSet& wall) { return fit_loss(params, wall, kWallSpec); }

ad::Expr periodic_loss(const BoundParams& params, const PeriodicPairs& periodic, const BoundaryOptions& options) {
    ad::Graph& g = *params.graph;
    if (periodic.empty()) return g.zero();
    ad::Expr sum = g.zero();
    const int fields = options.pressure_periodic ? 3 : 2;
    for (const auto& [lo, up] : periodic.pairs) {
        const auto a = as_array(
            forward(params, g.constant(periodic.lower.x[lo]), g.constant(periodic.lower.y[lo])));
        const auto b = as_array(
            forward(params, g.constant(periodic.upper.x[up]), g.constant(periodic.upper.y[up])));
        for (int k = 0; k < fields; ++k) {
            const ad::Expr d = a[k] - b[k];
            sum = sum + d * d;
        }
    }
    return sum / static_cast<double>(periodic.size());
}

BoundaryExprs boundary_losses(const BoundParams& params, const PointSet& inlet, const PointSet& outlet,
                              const PointSet& wall, const PeriodicPairs& periodic,
                              const BoundaryOptions& options) {
    return {inlet_loss(params, inlet), outlet_loss(params, outlet), wall_loss(params, wall),
            periodic_loss(params, periodic, options)};
}

ad::Expr total_loss(ad::Expr residual, ad::Expr labeled, const BoundaryExprs& boundary, const Weights& weights) {
    weights.validate();
    ad::Graph& g = *residual.graph();
    const ad::Expr lb = boundary.inlet + boundary.outlet + boundary.wall + boundary.periodic;
    return g.constant(weights.residual) * residual + g.constant(weights.labeled) * labeled +
           g.constant(weights.boundary) * lb;
}

double total_loss(const LossBreakdown& terms, const Weights& weights) {
    weights.validate();
    return weights.residual * terms.residual + weights.labeled * terms.labeled + weights.boundary * terms.boundary();
}

TermValue residual_term(const ParamVector& params, const PointSet& points, const ResidualModel& model,
                        bool with_grad) {
    if (points.empty()) throw DataError("residual point set is empty");
    const auto n = static_cast<Eigen::Index>(points.size());
    const JetPass pass(params, points.x, points.y, JetOrder::Second);
    const Jets& jets = pass.outputs();

    const bool use_unknown = !points.has_nu_eff() && model.viscosity_unknown >= 0;
    Eigen::ArrayXd nu(n);
    if (points.has_nu_eff()) {
        nu = Eigen::Map<const Eigen::ArrayXd>(points.nu_eff.data(), n);
    } else if (use_unknown) {
        nu.setConstant(params.unknowns().at(static_cast<std::size_t>(model.viscosity_unknown)).value());
    } else {
        nu.setConstant(model.constants.viscosity);
    }
    const ResidualArrays r = ns_residual(jets, nu, model.constants, model.sign);

    TermValue result;
    result.value = (r.mass.square() + r.xmom.square() + r.ymom.square()).sum() / static_cast<double>(n);
    if (!with_grad) return result;

    result.grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.size()));
    const double c = 2.0 / static_cast<double>(n);
    const Eigen::ArrayXd gm = c * r.mass;
    const Eigen::ArrayXd gx = c * r.xmom;
    const Eigen::ArrayXd gy = c * r.ymom;
    const double s = model.sign == ViscousSign::Standard ? -1.0 : 1.0;
    const double inv_rho = 1.0 / model.constants.density;
    auto row = [](const Eigen::MatrixXd& m, int k) { return m.row(k).transpose().array(); };

    Jets adj = Jets::zeros_like(jets);
    adj.value.row(0) = (gx * row(jets.dx, 0) + gy * row(jets.dx, 1)).transpose().matrix();
    adj.value.row(1) = (gx * row(jets.dy, 0) + gy * row(jets.dy, 1)).transpose().matrix();
    adj.dx.row(0) = (gm + gx * row(jets.value, 0)).transpose().matrix();
    adj.dx.row(1) = (gy * row(jets.value, 0)).transpose().matrix();
    adj.dx.row(2) = (gx * inv_rho).transpose().matrix();
    adj.dy.row(0) = (gx * row(jets.value, 1)).transpose().matrix();
    adj.dy.row(1) = (gm + gy * row(jets.value, 1)).transpose().matrix();
    adj.dy.row(2) = (gy * inv_rho).transpose().matrix();
    adj.dxx.row(0) = (s * nu * gx).transpose().matrix();
    adj.dxx.row(1) = (s * nu * gy).transpose().matrix();
    adj.dyy.row(0) = adj.dxx.row(0);
    adj.dyy.row(1) = adj.dxx.row(1);
    pass.backward(adj, result.grad);

    if (use_unknown) {
        const auto k = static_cast<std::size_t>(model.viscosity_unknown);
        const Eigen::ArrayXd lap_u = row(jets.dxx, 0) + row(jets.dyy, 0);
        const Eigen::ArrayXd lap_v = row(jets.dxx, 1) + row(jets.dyy, 1);
        double d_nu = s * (gx * lap_u + gy * lap_v).sum();
        const Unknown& unknown = params.unknowns()[k];
        if (unknown.positive) d_nu *= unknown.value();
        result.grad[static_cast<Eigen::Index>(params.unknown_offset(k))] += d_nu;
    }
    return result;
}

TermValue labeled_term(const ParamVector& params, const PointSet& points, bool with_grad) {
    check_labeled(points);
    return fit_term(params, points, kLabeledSpec, with_grad);
}

TermValue inlet_term(const ParamVector& params, const PointSet& inlet, bool with_grad) {
    check_inlet(inlet);
    return fit_term(params, inlet, kInletSpec, with_grad);
}

TermValue outlet_term(const ParamVector& params, const PointSet& outlet, bool with_grad) {
    check_outlet(outlet);
    return fit_term(params, outlet, kOutletSpec, with_grad);
}

TermValue wall_term(const ParamVector& params, const PointSet& wall, bool with_grad) {
    return fit_term(params, wall, kWallSpec, with_grad);
}

TermValue periodic_term(const ParamVector& params, const PeriodicPairs& periodic, const BoundaryOptions& options,
                        bool with_grad) {
    TermValue result;
    if (with_grad) result.grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.size()));
    if (periodic.empty()) return result;
    const std::size_t n = periodic.size();
    std::vector<double> xl(n), yl(n), xu(n), yu(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto [lo, up] = periodic.pairs[k];
        xl[k] = periodic.lower.x[lo];
        yl[k] = periodic.lower.y[lo];
        xu[k] = periodic.upper.x[up];
        yu[k] = periodic.upper.y[up];
    }
    const JetPass lower(params, xl, yl, JetOrder::Value);
    const JetPass upper(params, xu, yu, JetOrder::Value);
    Eigen::MatrixXd diff = lower.outputs().value - upper.outputs().value;
    if (!options.pressure_periodic) diff.row(2).setZero();
    result.value = diff.squaredNorm() / static_cast<double>(n);
    if (with_grad) {
        Jets adj;
        adj.value = (2.0 / static_cast<double>(n)) * diff;
        lower.backward(adj, result.grad);
        adj.value = -adj.value;
        upper.backward(adj, result.grad);
    }
    return result;
}

}  // namespace flowpinn
