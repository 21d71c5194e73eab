// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "flowpinn/autodiff.hpp"
#include "flowpinn/data.hpp"
#include "flowpinn/errors.hpp"
#include "flowpinn/losses.hpp"
#include "oracles.hpp"

using namespace flowpinn;

namespace {

/// u = tanh(x), v = 0, p = tanh(x) via one hidden neuron.
ParamVector tanh_x_network() {
    DenseLayer h{Eigen::MatrixXd::Zero(1, 2), Eigen::VectorXd::Zero(1)};
    h.weight(0, 0) = 1.0;
    DenseLayer o{Eigen::MatrixXd::Zero(3, 1), Eigen::VectorXd::Zero(3)};
    o.weight(0, 0) = 1.0;
    o.weight(2, 0) = 1.0;
    return ParamVector({h, o});
}

/// Network whose outputs are the given constants everywhere.
ParamVector constant_network(double u, double v, double p) {
    ParamVector net = init_glorot({2, 5, 3}, 3);
    net.layers()[1].weight.setZero();
    net.layers()[1].bias << u, v, p;
    return net;
}

double sum_boundary(const BoundaryExprs& b) {
    return b.inlet.value() + b.outlet.value() + b.wall.value() + b.periodic.value();
}

}  // namespace

TEST(Mse, HandExamples) {
    const std::vector<double> a{1, 2, 3};
    EXPECT_EQ(mse(a, a), 0.0);
    EXPECT_EQ(mse(std::vector<double>{2}, std::vector<double>{0}), 4.0);
    EXPECT_EQ(mse(std::vector<double>{1, 3}, std::vector<double>{0, 0}), (1.0 + 9.0) / 2.0);
    EXPECT_THROW(mse(a, std::vector<double>{1}), DataError);
    EXPECT_THROW(mse(std::vector<double>{}, std::vector<double>{}), DataError);
}

TEST(Mse, PermutationInvariant) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> N;
    std::vector<double> p(40), t(40);
    for (auto& e : p) e = N(rng);
    for (auto& e : t) e = N(rng);
    const double base = mse(p, t);
    std::vector<std::size_t> idx(40);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<double> ps, ts;
    for (std::size_t i : idx) {
        ps.push_back(p[i]);
        ts.push_back(t[i]);
    }
    EXPECT_NEAR(mse(ps, ts), base, 1e-14 * base);
}

TEST(ResidualLoss, ConstantNetworkIsZero) {
    const ParamVector net = constant_network(1.2, -0.3, 4.0);
    const PointSet pts = sample_rectangle(-1, 1, -1, 1, 30, 2);
    const ResidualModel model{{1.0, 0.05}};
    EXPECT_EQ(residual_term(net, pts, model, false).value, 0.0);
    ad::Graph g;
    EXPECT_EQ(residual_loss(bind(g, net, ParamBinding::Constant), pts, model).value(), 0.0);
}

TEST(ResidualLoss, SinglePointHandTriple) {
    const ParamVector net = tanh_x_network();
    const double x0 = 0.5, nu = 0.07, rho = 2.0;
    const double t = std::tanh(x0), s = 1.0 - t * t;
    // u = p = tanh(x): u_x = s, u_xx = -2ts, v = 0.
    const double a = s;
    const double b = t * s + s / rho - nu * (-2.0 * t * s);
    const double c = 0.0;
    PointSet pts;
    pts.add(x0, 0.3);
    const ResidualModel model{{rho, nu}};
    EXPECT_NEAR(residual_term(net, pts, model, false).value, a * a + b * b + c * c, 1e-15);
    ad::Graph g;
    EXPECT_NEAR(residual_loss(bind(g, net, ParamBinding::Constant), pts, model).value(), a * a + b * b + c * c,
                1e-15);
}

TEST(ResidualLoss, KovasznayWarmStartIsSmall) {
    const double re = 40.0;
    const ParamVector net = kovasznay_warm_start(re, 0.0, 1.0, 0.0, 1.0);
    const PointSet pts = sample_rectangle(0.1, 0.9, 0.1, 0.9, 200, 5);
    const double loss = residual_term(net, pts, ResidualModel{{1.0, 1.0 / re}}, false).value;
    EXPECT_LT(loss, 1e-6);
}

TEST(ResidualLoss, PerPointViscosityColumnIsUsed) {
    const ParamVector net = tanh_x_network();
    PointSet pts;
    pts.add(0.5, 0.0, {}, {}, {}, 0.3);
    PointSet laminar;
    laminar.add(0.5, 0.0);
    const double with_column = residual_term(net, pts, ResidualModel{{1.0, 0.01}}, false).value;
    const double matched = residual_term(net, laminar, ResidualModel{{1.0, 0.3}}, false).value;
    EXPECT_NEAR(with_column, matched, 1e-15);
}

TEST(LabeledLoss, PerfectAndMasked) {
    const ParamVector net = constant_network(1.0, 2.0, 3.0);
    PointSet pts;
    pts.add(0.1, 0.2, 1.0, 2.0, 3.0);
    pts.add(0.4, 0.5, 1.0, 2.0);
    EXPECT_EQ(labeled_term(net, pts, false).value, 0.0);
    // Pressure present in the array but masked out is ignored.
    PointSet vel;
    vel.add(0.1, 0.2, 1.0, 2.0);
    vel.labels(Field::P)[0] = 100.0;
    EXPECT_EQ(labeled_term(net, vel, false).value, 0.0);
}

TEST(LabeledLoss, TwoPointsOneOff) {
    const ParamVector net = constant_network(1.0, 2.0, 3.0);
    PointSet pts;
    pts.add(0.1, 0.2, 2.0, 2.0, 3.0);
    pts.add(0.4, 0.5, 1.0, 2.0, 3.0);
    EXPECT_DOUBLE_EQ(labeled_term(net, pts, false).value, 0.5);
    ad::Graph g;
    EXPECT_DOUBLE_EQ(labeled_loss(bind(g, net, ParamBinding::Constant), pts).value(), 0.5);
}

TEST(LabeledLoss, PermutationInvariant) {
    const ParamVector net = init_glorot({2, 8, 3}, 9);
    PointSet pts = sample_rectangle(-1, 1, -1, 1, 25, 3);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> N;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (int k = 0; k < 3; ++k) {
            pts.label[k][i] = N(rng);
            pts.mask[k][i] = (i + k) % 3 != 0;
        }
    }
    std::vector<std::size_t> idx(pts.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = idx.size() - 1 - i;
    const double a = labeled_term(net, pts, false).value, b = labeled_term(net, pts.subset(idx), false).value;
    EXPECT_NEAR(a, b, 1e-14 * a);
}

TEST(LabeledLoss, PointWithoutFieldsRejected) {
    PointSet pts;
    pts.add(0.0, 0.0);
    EXPECT_THROW(check_labeled(pts), DataError);
}

TEST(BoundaryLoss, HandValues) {
    const ParamVector zero = constant_network(0.0, 0.0, 0.0);
    PointSet wall;
    wall.add(0.3, 0.1);
    wall.add(0.7, 0.2);
    EXPECT_EQ(wall_term(zero, wall, false).value, 0.0);

    PointSet inlet;
    inlet.add(0.0, 0.5, 0.0, 0.0);
    EXPECT_DOUBLE_EQ(inlet_term(constant_network(1.0, 0.0, 9.0), inlet, false).value, 1.0);
    ad::Graph g;
    EXPECT_DOUBLE_EQ(inlet_loss(bind(g, constant_network(1.0, 0.0, 9.0), ParamBinding::Constant), inlet).value(),
                     1.0);

    PointSet outlet;
    outlet.add(1.0, 0.5, {}, {}, 2.0);
    EXPECT_DOUBLE_EQ(outlet_term(constant_network(5.0, 5.0, 0.0), outlet, false).value, 4.0);
}

TEST(BoundaryLoss, WallUsesLabelsWhereGiven) {
    PointSet wall;
    wall.add(0.3, 0.1, 1.0, 0.5);
    wall.add(0.7, 0.1);
    // Predictions (1, 0.5) everywhere: first point exact, second point off from no-slip.
    const double v = wall_term(constant_network(1.0, 0.5, 0.0), wall, false).value;
    EXPECT_DOUBLE_EQ(v, 1.0 / 2.0 + 0.25 / 2.0);
}

TEST(BoundaryLoss, PeriodicOfXOnlyNetworkIsZero) {
    ParamVector net = init_glorot({2, 6, 3}, 4);
    net.layers()[0].weight.col(1).setZero();
    PointSet lower, upper;
    for (int i = 0; i < 10; ++i) {
        lower.add(0.1 * i, 0.0);
        upper.add(0.1 * i, 0.8);
    }
    const PeriodicPairs pairs = pair_periodic(lower, upper, 0.8);
    EXPECT_EQ(periodic_term(net, pairs, {true}, false).value, 0.0);
    ad::Graph g;
    EXPECT_EQ(periodic_loss(bind(g, net, ParamBinding::Constant), pairs).value(), 0.0);
}

TEST(BoundaryLoss, InletAndOutletLabelChecks) {
    PointSet inlet;
    inlet.add(0.0, 0.0, 1.0);
    EXPECT_THROW(check_inlet(inlet), ConfigError);
    PointSet outlet;
    outlet.add(1.0, 0.0, 1.0, 1.0);
    EXPECT_THROW(check_outlet(outlet), ConfigError);
}

TEST(TotalLoss, WeightedCombination) {
    LossBreakdown t;
    t.residual = 0.1;
    t.labeled = 0.2;
    t.inlet = 0.05;
    t.outlet = 0.05;
    t.wall = 0.1;
    t.periodic = 0.1;
    EXPECT_NEAR(total_loss(t, {1, 1, 1}), 0.6, 1e-15);
    EXPECT_NEAR(total_loss(t, {0, 1, 1}), 0.2 + 0.3, 1e-15);
    for (double c : {0.5, 3.0, 17.0}) {
        EXPECT_NEAR(total_loss(t, {c * 0.7, c * 1.3, c * 2.0}), c * total_loss(t, {0.7, 1.3, 2.0}), 1e-14);
    }
    EXPECT_THROW(total_loss(t, {-1, 1, 1}), ConfigError);
}

namespace {

/// Small complete problem: random network, residual + all data/boundary sets.
struct Fixture {
    ParamVector net;
    PointSet residual, labeled, inlet, outlet, wall;
    PeriodicPairs periodic;
    ResidualModel model;

    Fixture() {
        net = init_glorot({2, 7, 6, 3}, 13);
        net.unknowns().push_back(Unknown::with_value("nu", 0.04, true));
        BundleConfig cfg;
        ManufacturedDomain d;
        d.residual_points = 10;
        d.labeled_points = 6;
        d.edge_points = 4;
        cfg.manufactured = d;
        const DatasetBundle b = build_bundle(cfg);
        residual = b.residual;
        labeled = b.labeled;
        inlet = b.inlet;
        outlet = b.outlet;
        wall = b.wall;
        wall.add(1.0, 0.5);  // one unlabeled no-slip point
        periodic = b.periodic;
        model = ResidualModel{{1.3, 0.025}, ViscousSign::Standard, 0};
    }

    /// Graph-route composite objective and its gradient.
    std::pair<double, Eigen::VectorXd> graph_total(const ParamVector& p, const Weights& w) const {
        ad::Graph g;
        const BoundParams bp = bind(g, p, ParamBinding::Variable);
        const ad::Expr total = total_loss(residual_loss(bp, residual, model), labeled_loss(bp, labeled),
                                          boundary_losses(bp, inlet, outlet, wall, periodic, {true}), w);
        const std::vector<double> grad = g.gradient(total, bp.flat);
        return {total.value(), Eigen::Map<const Eigen::VectorXd>(grad.data(), static_cast<Eigen::Index>(grad.size()))};
    }

    /// Batched-route composite objective and its gradient.
    std::pair<double, Eigen::VectorXd> batched_total(const ParamVector& p, const Weights& w) const {
        const TermValue e = residual_term(p, residual, model, true);
        const TermValue f = labeled_term(p, labeled, true);
        const TermValue bi = inlet_term(p, inlet, true), bo = outlet_term(p, outlet, true);
        const TermValue bw = wall_term(p, wall, true), bp = periodic_term(p, periodic, {true}, true);
        const double total = w.residual * e.value + w.labeled * f.value +
                             w.boundary * (bi.value + bo.value + bw.value + bp.value);
        const Eigen::VectorXd grad =
            w.residual * e.grad + w.labeled * f.grad + w.boundary * (bi.grad + bo.grad + bw.grad + bp.grad);
        return {total, grad};
    }
};

}  // namespace

TEST(LossRoutes, GraphAndBatchedAgreeTermByTerm) {
    const Fixture fx;
    ad::Graph g;
    const BoundParams bp = bind(g, fx.net, ParamBinding::Constant);
    EXPECT_NEAR(residual_term(fx.net, fx.residual, fx.model, false).value,
                residual_loss(bp, fx.residual, fx.model).value(), 1e-13);
    EXPECT_NEAR(labeled_term(fx.net, fx.labeled, false).value, labeled_loss(bp, fx.labeled).value(), 1e-13);
    const BoundaryExprs be = boundary_losses(bp, fx.inlet, fx.outlet, fx.wall, fx.periodic, {true});
    EXPECT_NEAR(inlet_term(fx.net, fx.inlet, false).value, be.inlet.value(), 1e-13);
    EXPECT_NEAR(outlet_term(fx.net, fx.outlet, false).value, be.outlet.value(), 1e-13);
    EXPECT_NEAR(wall_term(fx.net, fx.wall, false).value, be.wall.value(), 1e-13);
    EXPECT_NEAR(periodic_term(fx.net, fx.periodic, {true}, false).value, be.periodic.value(), 1e-13);
    EXPECT_GT(sum_boundary(be), 0.0);
}

TEST(LossRoutes, GradientsAgreeAcrossRoutes) {
    const Fixture fx;
    const Weights w{1.0, 0.7, 2.5};
    const auto [gv, gg] = fx.graph_total(fx.net, w);
    const auto [bv, bg] = fx.batched_total(fx.net, w);
    EXPECT_NEAR(gv, bv, 1e-12 * std::abs(gv));
    ASSERT_EQ(gg.size(), bg.size());
    for (Eigen::Index i = 0; i < gg.size(); ++i) {
        EXPECT_NEAR(gg[i], bg[i], 1e-10 * std::max(1.0, std::abs(gg[i]))) << i;
    }
}

TEST(LossRoutes, FullLossGradientMatchesFiniteDifferences) {
    const Fixture fx;
    const Weights w{1.0, 1.0, 1.0};
    const Eigen::VectorXd theta = fx.net.flatten();
    const Eigen::VectorXd grad = fx.batched_total(fx.net, w).second;
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        auto at = [&](double t) {
            ParamVector p = fx.net;
            Eigen::VectorXd th = theta;
            th[i] = t;
            p.assign(th);
            return fx.graph_total(p, w).first;
        };
        const double fd = oracle::central(at, theta[i], h);
        EXPECT_LT(oracle::rel_err(grad[i], fd, 1e-6), 1e-5) << "entry " << i << " grad " << grad[i] << " fd " << fd;
    }
}

TEST(LossRoutes, GradientIsLinearInWeights) {
    const Fixture fx;
    const Weights a{1.0, 0.5, 2.0}, b{0.3, 4.0, 1.0};
    const Weights sum{a.residual + b.residual, a.labeled + b.labeled, a.boundary + b.boundary};
    const Eigen::VectorXd ga = fx.batched_total(fx.net, a).second, gb = fx.batched_total(fx.net, b).second;
    const Eigen::VectorXd gs = fx.batched_total(fx.net, sum).second;
    EXPECT_LT((gs - ga - gb).norm(), 1e-12 * gs.norm());
}
