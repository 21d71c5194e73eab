// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "flowpinn/autodiff.hpp"
#include "flowpinn/data.hpp"
#include "flowpinn/jet_network.hpp"
#include "flowpinn/losses.hpp"
#include "flowpinn/problems.hpp"

using namespace flowpinn;

namespace {

LayerSizes sizes_for(int width, int depth) {
    LayerSizes s{2};
    for (int i = 0; i < depth; ++i) s.push_back(width);
    s.push_back(3);
    return s;
}

}  // namespace

static void BM_JetForwardBackward(benchmark::State& state) {
    const ParamVector p = init_glorot(sizes_for(static_cast<int>(state.range(0)), 3), 1);
    const PointSet pts = sample_rectangle(0, 2, -0.5, 1.5, static_cast<std::size_t>(state.range(1)), 2);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.size()));
    for (auto _ : state) {
        const JetPass pass(p, pts.x, pts.y, JetOrder::Second);
        Jets adj = Jets::zeros_like(pass.outputs());
        adj.value.setOnes();
        pass.backward(adj, grad);
        benchmark::DoNotOptimize(grad.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_JetForwardBackward)->Args({20, 1000})->Args({20, 5000})->Args({30, 5000})->Unit(benchmark::kMillisecond);

static void BM_ResidualTerm(benchmark::State& state) {
    const ParamVector p = init_glorot(sizes_for(20, 3), 1);
    const PointSet pts = sample_rectangle(0, 2, -0.5, 1.5, static_cast<std::size_t>(state.range(0)), 2);
    const ResidualModel model{{1.0, 0.025}};
    for (auto _ : state) benchmark::DoNotOptimize(residual_term(p, pts, model, true).value);
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ResidualTerm)->Arg(500)->Arg(5000)->Unit(benchmark::kMillisecond);

static void BM_GraphResidualLoss(benchmark::State& state) {
    const ParamVector p = init_glorot(sizes_for(20, 3), 1);
    const PointSet pts = sample_rectangle(0, 2, -0.5, 1.5, static_cast<std::size_t>(state.range(0)), 2);
    const ResidualModel model{{1.0, 0.025}};
    for (auto _ : state) {
        ad::Graph g;
        const BoundParams bp = bind(g, p, ParamBinding::Variable);
        const ad::Expr loss = residual_loss(bp, pts, model);
        benchmark::DoNotOptimize(g.gradient(loss, bp.flat));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GraphResidualLoss)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

static void BM_ForwardObjective(benchmark::State& state) {
    BundleConfig cfg;
    cfg.manufactured = ManufacturedDomain{};
    const ProblemSpec spec = make_problem(ProblemMode::Forward, std::make_shared<DatasetBundle>(build_bundle(cfg)));
    const ParamVector p = initial_params(spec, sizes_for(20, 3), 1);
    for (auto _ : state) benchmark::DoNotOptimize(evaluate_objective(spec, p, true).terms.total);
}
BENCHMARK(BM_ForwardObjective)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
