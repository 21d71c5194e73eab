// SPDX-License-Identifier: Apache-2.0
#include "flowpinn/physics.hpp"

#include <cmath>
#include <string>

#include "flowpinn/errors.hpp"

namespace flowpinn {

void FluidConstants::validate() const {
    if (!(density > 0.0) || !std::isfinite(density)) {
        throw ConfigError("density must be positive, got " + std::to_string(density));
    }
    if (!(viscosity > 0.0) || !std::isfinite(viscosity)) {
        throw ConfigError("viscosity must be positive, got " + std::to_string(viscosity));
    }
}

ResidualTriple ns_residual(const FlowExpr& flow, ad::Expr x, ad::Expr y, ad::Expr nu_eff,
                           const FluidConstants& constants, ViscousSign sign) {
    ad::Graph& g = *x.graph();
    const ad::Expr outs[] = {flow.u, flow.v, flow.p};
    const auto d_x = g.differentiate(outs, x);
    const auto d_y = g.differentiate(outs, y);
    const ad::Expr ux = d_x[0], vx = d_x[1], px = d_x[2];
    const ad::Expr uy = d_y[0], vy = d_y[1], py = d_y[2];
    const ad::Expr first_x[] = {ux, vx};
    const ad::Expr first_y[] = {uy, vy};
    const auto d_xx = g.differentiate(first_x, x);
    const auto d_yy = g.differentiate(first_y, y);
    const ad::Expr lap_u = d_xx[0] + d_yy[0];
    const ad::Expr lap_v = d_xx[1] + d_yy[1];

    const double inv_rho = 1.0 / constants.density;
    const ad::Expr visc = sign == ViscousSign::Standard ? -nu_eff : nu_eff;

    ResidualTriple r;
    r.mass = ux + vy;
    r.xmom = flow.u * ux + flow.v * uy + px * inv_rho + visc * lap_u;
    r.ymom = flow.u * vx + flow.v * vy + py * inv_rho + visc * lap_v;
    return r;
}

ResidualArrays ns_residual(const Jets& jets, const Eigen::ArrayXd& nu_eff, const FluidConstants& constants,
                           ViscousSign sign) {
    const Eigen::Index n = jets.value.cols();
    if (jets.dxx.cols() != n || jets.dyy.cols() != n) {
        throw ConfigError("residual needs second-derivative jets (evaluate with JetOrder::Second)");
    }
    if (nu_eff.size() != n) throw ConfigError("effective viscosity length does not match the batch");
    const auto u = jets.value.row(0).array().transpose();
    const auto v = jets.value.row(1).array().transpose();
    const auto ux = jets.dx.row(0).array().transpose();
    const auto vx = jets.dx.row(1).array().transpose();
    const auto px = jets.dx.row(2).array().transpose();
    const auto uy = jets.dy.row(0).array().transpose();
    const auto vy = jets.dy.row(1).array().transpose();
    const auto py = jets.dy.row(2).array().transpose();
    const Eigen::ArrayXd lap_u = (jets.dxx.row(0) + jets.dyy.row(0)).array().transpose();
    const Eigen::ArrayXd lap_v = (jets.dxx.row(1) + jets.dyy.row(1)).array().transpose();
    const double inv_rho = 1.0 / constants.density;
    const double s = sign == ViscousSign::Standard ? -1.0 : 1.0;

    ResidualArrays r;
    r.mass = ux + vy;
    r.xmom = u * ux + v * uy + px * inv_rho + s * nu_eff * lap_u;
    r.ymom = u * vx + v * vy + py * inv_rho + s * nu_eff * lap_v;
    return r;
}

}  // namespace flowpinn
