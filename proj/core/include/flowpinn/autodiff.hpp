// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace flowpinn::ad {

using NodeId = std::uint32_t;

enum class Op : std::uint8_t {
    Constant,
    Variable,
    Add,
    Subtract,
    Multiply,
    Divide,
    Negate,
    Tanh,
    Exp,
    Sin,
    Cos,
    Power,  // operand raised to a constant real exponent
};

class Graph;

/// Handle to a scalar node. Cheap to copy; valid as long as its graph lives.
class Expr {
  public:
    Expr() = default;
    Expr(Graph* graph, NodeId id) : graph_{graph}, id_{id} {}

    Graph* graph() const { return graph_; }
    NodeId id() const { return id_; }
    bool valid() const { return graph_ != nullptr; }

    double value() const;
    Op op() const;
    bool is_constant() const;
    bool is_zero() const;

  private:
    Graph* graph_ = nullptr;
    NodeId id_ = 0;
};

/// Append-only arena of scalar expression nodes.
///
/// Operands always precede the nodes that use them, so node ids are a
/// topological order and the graph is acyclic by construction. Every node
/// caches its value; changing a variable marks the graph dirty and the next
/// read re-evaluates all nodes in id order, which keeps repeated evaluations
/// bit-identical.
///
/// Differentiation is a source transformation: it appends new nodes that
/// compute the derivative, so its result can itself be differentiated.
class Graph {
  public:
    Graph();
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;
    Graph(Graph&&) = delete;
    Graph& operator=(Graph&&) = delete;

    Expr constant(double value);
    Expr variable(double value);
    Expr zero() { return {this, kZero}; }
    Expr one() { return {this, kOne}; }

    Expr add(Expr a, Expr b);
    Expr sub(Expr a, Expr b);
    Expr mul(Expr a, Expr b);
    Expr div(Expr a, Expr b);
    Expr neg(Expr a);
    Expr tanh(Expr a);
    Expr exp(Expr a);
    Expr sin(Expr a);
    Expr cos(Expr a);
    Expr pow(Expr a, double exponent);

    /// Sets a variable's value; dependent values refresh on the next read.
    void set_value(Expr variable, double value);
    /// Recomputes every cached value. Throws EvaluationError on x/0.
    void evaluate();
    double value(NodeId id);

    Op op(NodeId id) const { return ops_[id]; }
    std::size_t size() const { return ops_.size(); }

    /// d(output)/d(wrt) as a new expression. Zero constant if unreachable.
    Expr differentiate(Expr output, Expr wrt);
    /// Shares the tangent sweep between several outputs.
    std::vector<Expr> differentiate(std::span<const Expr> outputs, Expr wrt);

    /// Numeric reverse sweep: entry k is d(output)/d(wrt[k]) at current values.
    /// Throws NonFiniteError naming the first offending entry of `wrt`.
    std::vector<double> gradient(Expr output, std::span<const Expr> wrt);

  private:
    static constexpr NodeId kZero = 0;
    static constexpr NodeId kOne = 1;

    NodeId push(Op op, NodeId lhs, NodeId rhs, double aux);
    double compute(NodeId id) const;
    void ensure_evaluated();
    bool is_const(NodeId id) const { return ops_[id] == Op::Constant; }
    void check_same_graph(Expr a) const;

    std::vector<Op> ops_;
    std::vector<NodeId> lhs_;
    std::vector<NodeId> rhs_;
    std::vector<double> aux_;
    std::vector<double> values_;
    bool dirty_ = false;

    friend class Expr;
};

Expr operator+(Expr a, Expr b);
Expr operator-(Expr a, Expr b);
Expr operator*(Expr a, Expr b);
Expr operator/(Expr a, Expr b);
Expr operator-(Expr a);
Expr operator+(Expr a, double b);
Expr operator+(double a, Expr b);
Expr operator-(Expr a, double b);
Expr operator-(double a, Expr b);
Expr operator*(Expr a, double b);
Expr operator*(double a, Expr b);
Expr operator/(Expr a, double b);
Expr operator/(double a, Expr b);
Expr tanh(Expr a);
Expr exp(Expr a);
Expr sin(Expr a);
Expr cos(Expr a);
Expr pow(Expr a, double exponent);

/// Convenience wrappers over Graph::differentiate.
Expr diff(Expr output, Expr wrt);

}  // namespace flowpinn::ad
