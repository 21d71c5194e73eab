// SPDX-License-Identifier: Apache-2.0
#include "flowpinn/problems.hpp"

#include <set>
#include <sstream>

#include "flowpinn/errors.hpp"

namespace flowpinn {

ProblemSpec make_problem(ProblemMode mode, std::shared_ptr<const DatasetBundle> data, const ProblemOptions& options) {
    ProblemSpec spec;
    spec.mode = mode;
    spec.unknowns = options.unknowns;
    spec.constants = options.constants;
    spec.sign = options.sign;
    spec.ablate_dnn = options.ablate_dnn;
    spec.boundary.pressure_periodic = options.pressure_periodic;
    if (mode == ProblemMode::Inverse) {
        spec.active.inlet = false;
        spec.active.outlet = false;
        spec.active.periodic = false;
        spec.active.wall = data && !data->wall.empty();
    }
    spec.active.residual = !options.ablate_dnn;
    spec.data = std::move(data);
    return spec;
}

std::vector<Issue> validate(const ProblemSpec& spec) {
    std::vector<Issue> issues;
    auto add = [&](std::string field, std::string message, std::string hint) {
        issues.push_back({std::move(field), std::move(message), std::move(hint)});
    };
    if (!spec.data) {
        add("data", "no dataset bundle attached", "build one with build_bundle()");
        return issues;
    }
    const DatasetBundle& d = *spec.data;
    if (spec.mode == ProblemMode::Forward) {
        if (d.inlet.empty()) {
            add("inlet", "forward mode needs inlet points: the inlet velocity condition has nothing to constrain",
                "supply an inlet file with u and v columns");
        }
        if (d.outlet.empty()) {
            add("outlet", "forward mode needs outlet points: the imposed outlet pressure condition has nothing to "
                          "constrain",
                "supply an outlet file with a p column");
        }
        if (d.wall.empty()) {
            add("wall", "forward mode needs wall points for the no-slip condition", "supply a wall file");
        }
        if (d.periodic.empty()) {
            add("periodic", "forward mode needs periodic point pairs", "supply lower and upper periodic files");
        }
        if (!spec.active.inlet || !spec.active.outlet || !spec.active.wall || !spec.active.periodic) {
            add("active", "forward mode must keep every boundary term active", "use inverse mode to drop boundaries");
        }
    } else if (d.labeled.empty()) {
        add("labeled", "inverse mode needs labeled points", "supply interior velocity or wall pressure data");
    }

    auto require_points = [&](bool active, const PointSet& s, const char* name) {
        if (active && s.empty()) {
            add(name, std::string(name) + " term is active but its point set is empty",
                "deactivate the term or provide points");
        }
    };
    require_points(spec.active.residual, d.residual, "residual");
    require_points(spec.active.labeled, d.labeled, "labeled");
    if (spec.active.periodic && d.periodic.empty() && spec.mode == ProblemMode::Inverse) {
        add("periodic", "periodic term is active but no pairs exist", "deactivate the term");
    }
    if (spec.ablate_dnn && spec.active.residual) {
        add("active.residual", "ablation drops the residual term but it is still active",
            "build the spec with make_problem(..., {.ablate_dnn = true})");
    }

    if (spec.active.inlet && !d.inlet.empty() &&
        (d.inlet.count(Field::U) != d.inlet.size() || d.inlet.count(Field::V) != d.inlet.size())) {
        add("inlet", "inlet points lack velocity labels", "add u and v columns to the inlet file");
    }
    if (spec.active.outlet && !d.outlet.empty() && d.outlet.count(Field::P) != d.outlet.size()) {
        add("outlet", "outlet points lack pressure labels", "add a p column to the outlet file");
    }
    for (std::size_t i = 0; i < d.labeled.size(); ++i) {
        if (!d.labeled.has(Field::U, i) && !d.labeled.has(Field::V, i) && !d.labeled.has(Field::P, i)) {
            add("labeled", "labeled point " + std::to_string(i) + " has no available field",
                "drop the point or add a label");
            break;
        }
    }

    std::set<std::string> names;
    for (const auto& u : spec.unknowns) {
        if (u.name != "nu") {
            add("unknowns", "unknown '" + u.name + "' does not enter the residual", "the supported unknown is 'nu'");
        }
        if (!names.insert(u.name).second) add("unknowns", "unknown '" + u.name + "' declared twice", "remove one");
        if (u.positive && !(u.initial > 0.0)) {
            add("unknowns", "unknown '" + u.name + "' is flagged positive but starts at " + std::to_string(u.initial),
                "give a strictly positive initial value");
        }
    }
    if (!(spec.constants.density > 0.0)) add("density", "density must be positive", "set density > 0");
    if (!(spec.constants.viscosity > 0.0)) add("viscosity", "viscosity must be positive", "set viscosity > 0");
    return issues;
}

std::string format_issues(const std::vector<Issue>& issues) {
    std::ostringstream out;
    for (const auto& issue : issues) out << issue.field << ": " << issue.message << " (" << issue.hint << ")\n";
    return out.str();
}

void require_valid(const ProblemSpec& spec) {
    const auto issues = validate(spec);
    if (!issues.empty()) throw ConfigError("invalid problem:\n" + format_issues(issues));
}

ParamVector initial_params(const ProblemSpec& spec, const LayerSizes& sizes, std::uint64_t seed) {
    ParamVector params = init_glorot(sizes, seed);
    for (const auto& u : spec.unknowns) params.unknowns().push_back(Unknown::with_value(u.name, u.initial, u.positive));
    return params;
}

ResidualModel residual_model(const ProblemSpec& spec, const ParamVector& params) {
    return {spec.constants, spec.sign, params.find_unknown("nu")};
}

ObjectiveExprs assemble_objective(const ProblemSpec& spec, const BoundParams& params) {
    require_valid(spec);
    ad::Graph& g = *params.graph;
    const DatasetBundle& d = *spec.data;
    ObjectiveExprs e{g.zero(), g.zero(), {g.zero(), g.zero(), g.zero(), g.zero()}};
    if (spec.active.residual) {
        int nu_index = -1;
        for (std::size_t k = 0; k < spec.unknowns.size(); ++k) {
            if (spec.unknowns[k].name == "nu") nu_index = static_cast<int>(k);
        }
        e.residual = residual_loss(params, d.residual, {spec.constants, spec.sign, nu_index});
    }
    if (spec.active.labeled && !d.labeled.empty()) e.labeled = labeled_loss(params, d.labeled);
    if (spec.active.inlet && !d.inlet.empty()) e.boundary.inlet = inlet_loss(params, d.inlet);
    if (spec.active.outlet && !d.outlet.empty()) e.boundary.outlet = outlet_loss(params, d.outlet);
    if (spec.active.wall && !d.wall.empty()) e.boundary.wall = wall_loss(params, d.wall);
    if (spec.active.periodic && !d.periodic.empty()) {
        e.boundary.periodic = periodic_loss(params, d.periodic, spec.boundary);
    }
    return e;
}

ObjectiveValues evaluate_objective(const ProblemSpec& spec, const ParamVector& params, bool with_grad,
                                   const PointSet* residual_override) {
    const DatasetBundle& d = *spec.data;
    const auto n = static_cast<Eigen::Index>(params.size());
    ObjectiveValues out;
    if (with_grad) {
        out.grad_residual = Eigen::VectorXd::Zero(n);
        out.grad_labeled = Eigen::VectorXd::Zero(n);
        out.grad_boundary = Eigen::VectorXd::Zero(n);
    }
    auto take = [&](const TermValue& t, double& value, Eigen::VectorXd& grad) {
        value = t.value;
        if (with_grad) grad += t.grad;
    };
    if (spec.active.residual) {
        const PointSet& points = residual_override ? *residual_override : d.residual;
        take(residual_term(params, points, residual_model(spec, params), with_grad), out.terms.residual,
             out.grad_residual);
    }
    if (spec.active.labeled && !d.labeled.empty()) {
        take(labeled_term(params, d.labeled, with_grad), out.terms.labeled, out.grad_labeled);
    }
    if (spec.active.inlet && !d.inlet.empty()) {
        take(inlet_term(params, d.inlet, with_grad), out.terms.inlet, out.grad_boundary);
    }
    if (spec.active.outlet && !d.outlet.empty()) {
        take(outlet_term(params, d.outlet, with_grad), out.terms.outlet, out.grad_boundary);
    }
    if (spec.active.wall && !d.wall.empty()) {
        take(wall_term(params, d.wall, with_grad), out.terms.wall, out.grad_boundary);
    }
    if (spec.active.periodic && !d.periodic.empty()) {
        take(periodic_term(params, d.periodic, spec.boundary, with_grad), out.terms.periodic, out.grad_boundary);
    }
    return out;
}

}  // namespace flowpinn
