#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "xc/numerics.hpp"
#include "xc/tensor.hpp"

namespace xc {

class Tape;

/// Handle to a node on a Tape.
struct Var {
    Tape* tape = nullptr;
    std::size_t idx = 0;

    const Tensor& value() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
};

/// Reverse-mode tape. Records a DAG of tensor ops during a forward pass;
/// backward() seeds one or more scalar outputs and accumulates gradients
/// for every leaf that was created from a trainable Parameter.
///
/// Gradients are accumulated in reverse recording order, which is fully
/// deterministic for a deterministic forward pass.
class Tape {
public:
    struct Node {
        Tensor value;
        Tensor grad;
        bool needs_grad = false;
        Parameter* leaf = nullptr;
        std::function<void(Tape&, Node&)> backward;
    };

    Var leaf(Parameter& p);
    Var constant(Tensor t);

    // Binary / structural ops
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var scale(Var a, double c);
    Var matmul(Var a, Var b);
    Var matmul_nt(Var a, Var b);     // a * b^T
    Var add_row_broadcast(Var m, Var bias);  // bias is a length-cols vector
    Var concat_cols(const std::vector<Var>& parts);
    Var slice_cols(Var m, std::size_t start, std::size_t count);
    Var row(Var m, std::size_t i);   // 1 x cols view (copying)
    Var gather_rows(Var table, std::vector<std::size_t> indices);
    Var row_scale(Var m, Var s, std::size_t s_col);  // row t of m scaled by s(t, s_col)
    Var scale_by_entry(Var m, Var vec, std::size_t idx);  // m * vec[idx]
    Var dot(Var a, Var b);           // both 1 x d -> 1 x 1
    Var add_scalar(Var a, Var s);    // a (1x1) + s (1x1)

    // Nonlinear ops
    Var softmax_rows(Var m);
    Var layer_norm(Var x, Var gain, Var bias, double eps);
    Var gelu(Var x);

    /// Seeds d(output)/d(output) = seed for each (scalar node, seed) pair,
    /// then sweeps the tape in reverse. Leaf grads for trainable
    /// parameters are added into Parameter::grad.
    void backward(const std::vector<std::pair<Var, double>>& seeds);
    void backward(Var out, double seed = 1.0) { backward({{out, seed}}); }

    const Node& node(std::size_t i) const { return nodes_[i]; }
    std::size_t size() const { return nodes_.size(); }

private:
    friend struct Var;
    std::vector<Node> nodes_;

    Var push(Tensor value, bool needs_grad, std::function<void(Tape&, Node&)> bw);
    Tensor& grad_of(std::size_t i);
};

inline const Tensor& Var::value() const { return tape->node(idx).value; }

}  // namespace xc
