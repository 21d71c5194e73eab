// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <span>

#include "flowpinn/autodiff.hpp"
#include "flowpinn/network.hpp"
#include "flowpinn/physics.hpp"
#include "flowpinn/point_set.hpp"

namespace flowpinn {

/// How the residual obtains its effective viscosity at a point: the point's
/// nu_eff column when present, otherwise the trainable unknown
/// `viscosity_unknown` (index into ParamVector::unknowns) when >= 0,
/// otherwise the laminar constant.
struct ResidualModel {
    FluidConstants constants;
    ViscousSign sign = ViscousSign::Standard;
    int viscosity_unknown = -1;
};

struct BoundaryOptions {
    bool pressure_periodic = false;  // also equate p across periodic pairs
};

/// Every term of the composite objective plus the weights that combined them.
struct LossBreakdown {
    double residual = 0.0;  // L_e
    double labeled = 0.0;   // L_f
    double inlet = 0.0;
    double outlet = 0.0;
    double wall = 0.0;
    double periodic = 0.0;
    double w_residual = 1.0;
    double w_labeled = 1.0;
    double w_boundary = 1.0;
    double total = 0.0;

    double boundary() const { return inlet + outlet + wall + periodic; }
};

/// (1/n) * sum (pred - target)^2
double mse(std::span<const double> pred, std::span<const double> target);

// ---------------------------------------------------------------------------
// Expression-graph route. Builds the loss as one scalar expression whose
// gradient with respect to bound parameters comes from Graph::gradient.
// ---------------------------------------------------------------------------

ad::Expr residual_loss(const BoundParams& params, const PointSet& points, const ResidualModel& model);
ad::Expr labeled_loss(const BoundParams& params, const PointSet& points);
ad::Expr inlet_loss(const BoundParams& params, const PointSet& inlet);
ad::Expr outlet_loss(const BoundParams& params, const PointSet& outlet);
ad::Expr wall_loss(const BoundParams& params, const PointSet& wall);
ad::Expr periodic_loss(const BoundParams& params, const PeriodicPairs& periodic, const BoundaryOptions& options = {});

struct BoundaryExprs {
    ad::Expr inlet, outlet, wall, periodic;
};

BoundaryExprs boundary_losses(const BoundParams& params, const PointSet& inlet, const PointSet& outlet,
                              const PointSet& wall, const PeriodicPairs& periodic,
                              const BoundaryOptions& options = {});

struct Weights {
    double residual = 1.0;
    double labeled = 1.0;
    double boundary = 1.0;

    void validate() const;
};

/// w_e * L_e + w_f * L_f + w_b * (inlet + outlet + wall + periodic)
ad::Expr total_loss(ad::Expr residual, ad::Expr labeled, const BoundaryExprs& boundary, const Weights& weights);
double total_loss(const LossBreakdown& terms, const Weights& weights);

// ---------------------------------------------------------------------------
// Batched route used for training. Each term returns its value and, when
// requested, its gradient over the full flat parameter vector.
// ---------------------------------------------------------------------------

struct TermValue {
    double value = 0.0;
    Eigen::VectorXd grad;  // empty unless requested
};

TermValue residual_term(const ParamVector& params, const PointSet& points, const ResidualModel& model,
                        bool with_grad);
TermValue labeled_term(const ParamVector& params, const PointSet& points, bool with_grad);
TermValue inlet_term(const ParamVector& params, const PointSet& inlet, bool with_grad);
TermValue outlet_term(const ParamVector& params, const PointSet& outlet, bool with_grad);
TermValue wall_term(const ParamVector& params, const PointSet& wall, bool with_grad);
TermValue periodic_term(const ParamVector& params, const PeriodicPairs& periodic, const BoundaryOptions& options,
                        bool with_grad);

/// Configuration checks shared by both routes.
void check_inlet(const PointSet& inlet);
void check_outlet(const PointSet& outlet);
void check_labeled(const PointSet& labeled);

}  // namespace flowpinn
