// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include "flowpinn/autodiff.hpp"
#include "flowpinn/jet_network.hpp"
#include "flowpinn/network.hpp"

namespace flowpinn {

/// Density and laminar kinematic viscosity, in whatever units the fields use
/// (nondimensional during training: density 1, viscosity 1/Re).
struct FluidConstants {
    double density = 1.0;
    double viscosity = 0.0;

    void validate() const;
};

/// Sign of the viscous term in the momentum residual. `Standard` is
/// u.grad(u) + grad(p)/rho - nu*lap(u); `AsPrinted` flips it to +nu*lap(u).
enum class ViscousSign { Standard, AsPrinted };

struct ResidualTriple {
    ad::Expr mass, xmom, ymom;
};

/// Steady incompressible Navier-Stokes residual built from expressions of
/// the input nodes `x`, `y`. `nu_eff` may be a constant or an expression of
/// trainable unknowns.
ResidualTriple ns_residual(const FlowExpr& flow, ad::Expr x, ad::Expr y, ad::Expr nu_eff,
                           const FluidConstants& constants, ViscousSign sign = ViscousSign::Standard);

/// The same residual over a batch, from jets carrying second derivatives.
struct ResidualArrays {
    Eigen::ArrayXd mass, xmom, ymom;
};

ResidualArrays ns_residual(const Jets& jets, const Eigen::ArrayXd& nu_eff, const FluidConstants& constants,
                           ViscousSign sign = ViscousSign::Standard);

}  // namespace flowpinn
