// SPDX-License-Identifier: Apache-2.0
#include "flowpinn/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "flowpinn/errors.hpp"

namespace flowpinn::ad {

namespace {
constexpr NodeId kNone = static_cast<NodeId>(-1);
}

double Expr::value() const { return graph_->value(id_); }
Op Expr::op() const { return graph_->op(id_); }
bool Expr::is_constant() const { return graph_->op(id_) == Op::Constant; }
bool Expr::is_zero() const { return id_ == Graph::kZero; }

Graph::Graph() {
    push(Op::Constant, 0, 0, 0.0);
    push(Op::Constant, 0, 0, 1.0);
}

NodeId Graph::push(Op op, NodeId lhs, NodeId rhs, double aux) {
    const auto id = static_cast<NodeId>(ops_.size());
    ops_.push_back(op);
    lhs_.push_back(lhs);
    rhs_.push_back(rhs);
    aux_.push_back(aux);
    values_.push_back(0.0);
    if (op == Op::Constant || op == Op::Variable) {
        values_[id] = aux;
    } else if (!dirty_) {
        values_[id] = compute(id);
    }
    return id;
}

double Graph::compute(NodeId id) const {
    const double a = values_[lhs_[id]];
    const double b = values_[rhs_[id]];
    switch (ops_[id]) {
        case Op::Constant:
        case Op::Variable:
            return values_[id];
        case Op::Add:
            return a + b;
        case Op::Subtract:
            return a - b;
        case Op::Multiply:
            return a * b;
        case Op::Divide:
            if (b == 0.0) throw EvaluationError("division by zero", id);
            return a / b;
        case Op::Negate:
            return -a;
        case Op::Tanh:
            return std::tanh(a);
        case Op::Exp:
            return std::exp(a);
        case Op::Sin:
            return std::sin(a);
        case Op::Cos:
            return std::cos(a);
        case Op::Power:
            return std::pow(a, aux_[id]);
    }
    return 0.0;
}

void Graph::evaluate() {
    for (NodeId id = 0; id < ops_.size(); ++id) {
        if (ops_[id] != Op::Constant && ops_[id] != Op::Variable) values_[id] = compute(id);
    }
    dirty_ = false;
}

void Graph::ensure_evaluated() {
    if (dirty_) evaluate();
}

double Graph::value(NodeId id) {
    ensure_evaluated();
    return values_[id];
}

void Graph::set_value(Expr variable, double value) {
    check_same_graph(variable);
    if (ops_[variable.id()] != Op::Variable) throw ConfigError("set_value on a non-variable node");
    aux_[variable.id()] = value;
    values_[variable.id()] = value;
    dirty_ = true;
}

void Graph::check_same_graph(Expr a) const {
    if (a.graph() != this) throw ConfigError("expression belongs to a different graph");
}

Expr Graph::constant(double value) {
    if (value == 0.0 && !std::signbit(value)) return zero();
    if (value == 1.0) return one();
    return {this, push(Op::Constant, 0, 0, value)};
}

Expr Graph::variable(double value) { return {this, push(Op::Variable, 0, 0, value)}; }

Expr Graph::add(Expr a, Expr b) {
    check_same_graph(a);
    check_same_graph(b);
    if (a.id() == kZero) return b;
    if (b.id() == kZero) return a;
    if (is_const(a.id()) && is_const(b.id())) return constant(values_[a.id()] + values_[b.id()]);
    return {this, push(Op::Add, a.id(), b.id(), 0.0)};
}

Expr Graph::sub(Expr a, Expr b) {
    check_same_graph(a);
    check_same_graph(b);
    if (b.id() == kZero) return a;
    if (a.id() == kZero) return neg(b);
    if (is_const(a.id()) && is_const(b.id())) return constant(values_[a.id()] - values_[b.id()]);
    return {this, push(Op::Subtract, a.id(), b.id(), 0.0)};
}

Expr Graph::mul(Expr a, Expr b) {
    check_same_graph(a);
    check_same_graph(b);
    if (a.id() == kZero || b.id() == kZero) return zero();
    if (a.id() == kOne) return b;
    if (b.id() == kOne) return a;
    if (is_const(a.id()) && is_const(b.id())) return constant(values_[a.id()] * values_[b.id()]);
    return {this, push(Op::Multiply, a.id(), b.id(), 0.0)};
}

Expr Graph::div(Expr a, Expr b) {
    check_same_graph(a);
    check_same_graph(b);
    if (b.id() == kOne) return a;
    const bool b_is_zero = is_const(b.id()) && values_[b.id()] == 0.0;
    if (!b_is_zero) {
        if (a.id() == kZero) return zero();
        if (is_const(a.id()) && is_const(b.id())) return constant(values_[a.id()] / values_[b.id()]);
    }
    return {this, push(Op::Divide, a.id(), b.id(), 0.0)};
}

Expr Graph::neg(Expr a) {
    check_same_graph(a);
    if (a.id() == kZero) return a;
    if (is_const(a.id())) return constant(-values_[a.id()]);
    if (ops_[a.id()] == Op::Negate) return {this, lhs_[a.id()]};
    return {this, push(Op::Negate, a.id(), 0, 0.0)};
}

Expr Graph::tanh(Expr a) {
    check_same_graph(a);
    if (is_const(a.id())) return constant(std::tanh(values_[a.id()]));
    return {this, push(Op::Tanh, a.id(), 0, 0.0)};
}

Expr Graph::exp(Expr a) {
    check_same_graph(a);
    if (is_const(a.id())) return constant(std::exp(values_[a.id()]));
    return {this, push(Op::Exp, a.id(), 0, 0.0)};
}

Expr Graph::sin(Expr a) {
    check_same_graph(a);
    if (is_const(a.id())) return constant(std::sin(values_[a.id()]));
    return {this, push(Op::Sin, a.id(), 0, 0.0)};
}

Expr Graph::cos(Expr a) {
    check_same_graph(a);
    if (is_const(a.id())) return constant(std::cos(values_[a.id()]));
    return {this, push(Op::Cos, a.id(), 0, 0.0)};
}

Expr Graph::pow(Expr a, double exponent) {
    check_same_graph(a);
    if (exponent == 0.0) return one();
    if (exponent == 1.0) return a;
    if (is_const(a.id())) return constant(std::pow(values_[a.id()], exponent));
    return {this, push(Op::Power, a.id(), 0, exponent)};
}

Expr Graph::differentiate(Expr output, Expr wrt) {
    const Expr outputs[] = {output};
    return differentiate(std::span<const Expr>(outputs), wrt).front();
}

// Forward-mode source transformation. Tangents are only built for nodes
// that lie on a path from `wrt` to one of the outputs.
std::vector<Expr> Graph::differentiate(std::span<const Expr> outputs, Expr wrt) {
    check_same_graph(wrt);
    if (ops_[wrt.id()] != Op::Variable) throw ConfigError("differentiate: wrt must be a variable node");
    ensure_evaluated();

    NodeId last = wrt.id();
    for (const Expr& out : outputs) {
        check_same_graph(out);
        last = std::max(last, out.id());
    }
    const NodeId first = wrt.id();
    const std::size_t span_len = last - first + 1;

    // Ancestors of the outputs within [first, last].
    std::vector<char> needed(span_len, 0);
    for (const Expr& out : outputs) {
        if (out.id() >= first) needed[out.id() - first] = 1;
    }
    for (NodeId id = last; id > first; --id) {
        if (!needed[id - first]) continue;
        switch (ops_[id]) {
            case Op::Constant:
            case Op::Variable:
                break;
            case Op::Add:
            case Op::Subtract:
            case Op::Multiply:
            case Op::Divide:
                if (rhs_[id] >= first) needed[rhs_[id] - first] = 1;
                [[fallthrough]];
            default:
                if (lhs_[id] >= first) needed[lhs_[id] - first] = 1;
        }
    }

    std::vector<NodeId> tangent(span_len, kNone);
    tangent[0] = kOne;
    auto tan_of = [&](NodeId id) -> Expr {
        if (id < first) return zero();
        const NodeId t = tangent[id - first];
        return t == kNone ? zero() : Expr{this, t};
    };

    for (NodeId id = first + 1; id <= last; ++id) {
        if (!needed[id - first]) continue;
        const Op op = ops_[id];
        if (op == Op::Constant || op == Op::Variable) continue;
        const Expr self{this, id};
        const Expr a{this, lhs_[id]};
        const Expr b{this, rhs_[id]};
        const Expr ta = tan_of(a.id());
        const Expr tb = (op == Op::Add || op == Op::Subtract || op == Op::Multiply || op == Op::Divide)
                            ? tan_of(b.id())
                            : zero();
        if (ta.is_zero() && tb.is_zero()) continue;
        Expr t;
        switch (op) {
            case Op::Add:
                t = add(ta, tb);
                break;
            case Op::Subtract:
                t = sub(ta, tb);
                break;
            case Op::Multiply:
                t = add(mul(ta, b), mul(a, tb));
                break;
            case Op::Divide:
                t = div(sub(ta, mul(self, tb)), b);
                break;
            case Op::Negate:
                t = neg(ta);
                break;
            case Op::Tanh:
                t = mul(sub(one(), mul(self, self)), ta);
                break;
            case Op::Exp:
                t = mul(self, ta);
                break;
            case Op::Sin:
                t = mul(cos(a), ta);
                break;
            case Op::Cos:
                t = neg(mul(sin(a), ta));
                break;
            case Op::Power: {
                const double c = aux_[id];
                t = mul(mul(constant(c), pow(a, c - 1.0)), ta);
                break;
            }
            default:
                break;
        }
        if (!t.is_zero()) tangent[id - first] = t.id();
    }

    std::vector<Expr> result;
    result.reserve(outputs.size());
    for (const Expr& out : outputs) result.push_back(tan_of(out.id()));
    return result;
}

std::vector<double> Graph::gradient(Expr output, std::span<const Expr> wrt) {
    check_same_graph(output);
    ensure_evaluated();
    const NodeId root = output.id();
    std::vector<double> adj(root + 1, 0.0);
    adj[root] = 1.0;
    for (NodeId id = root; id > kOne; --id) {
        const double g = adj[id];
        if (g == 0.0) continue;
        const NodeId l = lhs_[id];
        const NodeId r = rhs_[id];
        switch (ops_[id]) {
            case Op::Constant:
            case Op::Variable:
                break;
            case Op::Add:
                adj[l] += g;
                adj[r] += g;
                break;
            case Op::Subtract:
                adj[l] += g;
                adj[r] -= g;
                break;
            case Op::Multiply:
                adj[l] += g * values_[r];
                adj[r] += g * values_[l];
                break;
            case Op::Divide:
                adj[l] += g / values_[r];
                adj[r] -= g * values_[id] / values_[r];
                break;
            case Op::Negate:
                adj[l] -= g;
                break;
            case Op::Tanh:
                adj[l] += g * (1.0 - values_[id] * values_[id]);
                break;
            case Op::Exp:
                adj[l] += g * values_[id];
                break;
            case Op::Sin:
                adj[l] += g * std::cos(values_[l]);
                break;
            case Op::Cos:
                adj[l] -= g * std::sin(values_[l]);
                break;
            case Op::Power: {
                const double c = aux_[id];
                adj[l] += g * c * std::pow(values_[l], c - 1.0);
                break;
            }
        }
    }

    std::vector<double> grad(wrt.size(), 0.0);
    for (std::size_t k = 0; k < wrt.size(); ++k) {
        check_same_graph(wrt[k]);
        const NodeId id = wrt[k].id();
        if (id <= root) grad[k] = adj[id];
        if (!std::isfinite(grad[k])) throw NonFiniteError("non-finite gradient entry", k);
    }
    return grad;
}

namespace {
Graph& graph_of(Expr a, Expr b) {
    if (a.graph() != b.graph()) throw ConfigError("operands belong to different graphs");
    return *a.graph();
}
}  // namespace

Expr operator+(Expr a, Expr b) { return graph_of(a, b).add(a, b); }
Expr operator-(Expr a, Expr b) { return graph_of(a, b).sub(a, b); }
Expr operator*(Expr a, Expr b) { return graph_of(a, b).mul(a, b); }
Expr operator/(Expr a, Expr b) { return graph_of(a, b).div(a, b); }
Expr operator-(Expr a) { return a.graph()->neg(a); }
Expr operator+(Expr a, double b) { return a + a.graph()->constant(b); }
Expr operator+(double a, Expr b) { return b.graph()->constant(a) + b; }
Expr operator-(Expr a, double b) { return a - a.graph()->constant(b); }
Expr operator-(double a, Expr b) { return b.graph()->constant(a) - b; }
Expr operator*(Expr a, double b) { return a * a.graph()->constant(b); }
Expr operator*(double a, Expr b) { return b.graph()->constant(a) * b; }
Expr operator/(Expr a, double b) { return a / a.graph()->constant(b); }
Expr operator/(double a, Expr b) { return b.graph()->constant(a) / b; }
Expr tanh(Expr a) { return a.graph()->tanh(a); }
Expr exp(Expr a) { return a.graph()->exp(a); }
Expr sin(Expr a) { return a.graph()->sin(a); }
Expr cos(Expr a) { return a.graph()->cos(a); }
Expr pow(Expr a, double exponent) { return a.graph()->pow(a, exponent); }

Expr diff(Expr output, Expr wrt) { return output.graph()->differentiate(output, wrt); }

}  // namespace flowpinn::ad
