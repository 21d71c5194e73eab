// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "flowpinn/data.hpp"
#include "flowpinn/losses.hpp"
#include "flowpinn/network.hpp"
#include "flowpinn/physics.hpp"

namespace flowpinn {

/// A trainable scalar inferred alongside the network. The only name the
/// residual understands is "nu" (laminar viscosity).
struct UnknownDecl {
    std::string name;
    double initial = 0.0;
    bool positive = false;
};

struct ActiveTerms {
    bool residual = true;
    bool labeled = true;
    bool inlet = true;
    bool outlet = true;
    bool wall = true;
    bool periodic = true;

    bool any_boundary() const { return inlet || outlet || wall || periodic; }
};

struct ProblemSpec {
    ProblemMode mode = ProblemMode::Forward;
    std::shared_ptr<const DatasetBundle> data;
    ActiveTerms active;
    std::vector<UnknownDecl> unknowns;
    FluidConstants constants{1.0, 0.025};
    ViscousSign sign = ViscousSign::Standard;
    bool ablate_dnn = false;  // drop the residual term (plain data-fitting network)
    BoundaryOptions boundary;
};

struct ProblemOptions {
    std::vector<UnknownDecl> unknowns;
    FluidConstants constants{1.0, 0.025};
    ViscousSign sign = ViscousSign::Standard;
    bool ablate_dnn = false;
    bool pressure_periodic = false;
};

/// Builds a spec whose active terms follow the mode: forward activates every
/// term; inverse activates the residual and labeled terms, plus the wall term
/// only when the bundle carries wall points.
ProblemSpec make_problem(ProblemMode mode, std::shared_ptr<const DatasetBundle> data, const ProblemOptions& options = {});

struct Issue {
    std::string field;
    std::string message;
    std::string hint;
};

/// Every structural problem with the spec; empty when valid.
std::vector<Issue> validate(const ProblemSpec& spec);
/// Throws ConfigError listing every issue.
void require_valid(const ProblemSpec& spec);

std::string format_issues(const std::vector<Issue>& issues);

/// Glorot-initialized network with the spec's unknowns appended.
ParamVector initial_params(const ProblemSpec& spec, const LayerSizes& sizes, std::uint64_t seed);

ResidualModel residual_model(const ProblemSpec& spec, const ParamVector& params);

/// Expression-graph objective. Inactive terms are the zero constant.
struct ObjectiveExprs {
    ad::Expr residual, labeled;
    BoundaryExprs boundary;
};

ObjectiveExprs assemble_objective(const ProblemSpec& spec, const BoundParams& params);

/// Batched objective. Gradients, when requested, cover the full flat
/// parameter vector; `grad_boundary` sums only the active boundary terms.
struct ObjectiveValues {
    LossBreakdown terms;  // weights left at their defaults
    Eigen::VectorXd grad_residual, grad_labeled, grad_boundary;
};

ObjectiveValues evaluate_objective(const ProblemSpec& spec, const ParamVector& params, bool with_grad,
                                   const PointSet* residual_override = nullptr);

}  // namespace flowpinn
