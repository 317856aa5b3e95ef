#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fsa/tensor.hpp"

namespace fsa {

using NodeId = std::uint32_t;

enum class OpKind {
    input,
    param,
    add,
    add_col,
    matmul,
    conv1d,
    pow_int,
    relu,
    poly_act,
    max_pool_time,
    concat,
    sum,
    softmax_xent,
};

const char* op_name(OpKind k);

// Reverse-mode tape. Nodes are appended in topological order (inputs always
// precede consumers); backward() walks the tape once in reverse.
class Graph {
public:
    struct Node {
        OpKind kind;
        Tensor value;
        Tensor grad;  // empty until touched by backward()
        std::vector<NodeId> inputs;
        bool leaf = false;
        std::function<void(Graph&, NodeId)> backward_fn;
    };

    NodeId input(Tensor v);
    // Leaf marked as a trainable parameter; receives a gradient on backward.
    NodeId param(Tensor v);

    NodeId add(NodeId a, NodeId b);
    // x is C x T, bias a C-vector added to every time column.
    NodeId add_col(NodeId x, NodeId bias);
    // a is m x k; b is k x n or a k-vector (treated as a column).
    NodeId matmul(NodeId a, NodeId b);
    // x is C_in x T (or a T-vector, treated as 1 x T); w is C_out x C_in x k.
    // Cross-correlation, zero padding.
    NodeId conv1d(NodeId x, NodeId w, int stride, int pad);
    NodeId elementwise_pow(NodeId x, int k);
    NodeId relu(NodeId x);
    // The branch-network polynomial activation. u is C x T or a C-vector;
    // v and z are (K+1) x C. With per_node false the data-dependent
    // coefficient term is a shared sum over all nodes; with per_node true
    // each node's coefficients see only its own pre-activation.
    NodeId poly_activation(NodeId u, NodeId v, NodeId z, bool per_node = false);
    // C x T -> C vector of per-channel maxima over time. Gradient routes to
    // the first maximal time index per channel.
    NodeId global_max_pool_time(NodeId x);
    NodeId concat(const std::vector<NodeId>& parts);
    NodeId sum(NodeId x);
    NodeId softmax_cross_entropy(NodeId logits, std::size_t label);

    // Reverse accumulation from a scalar root. Every leaf ends up with a
    // gradient tensor of its own shape (zeros when unreached).
    void backward(NodeId root);

    const Tensor& value(NodeId id) const { return nodes_[id].value; }
    double scalar_value(NodeId id) const;
    // Gradient of a node; valid after backward(). Unreached nodes report a
    // zero tensor of the node's shape.
    const Tensor& grad(NodeId id);
    bool is_leaf(NodeId id) const { return nodes_[id].leaf; }
    std::size_t size() const { return nodes_.size(); }

    // Accumulation target used by backward closures.
    Tensor& grad_ref(NodeId id);

private:
    NodeId push(Node n);
    std::vector<Node> nodes_;
};

// Independent finite-difference verification. The builder must register the
// given parameter tensors (in order) via Graph::param and return the scalar
// root plus those param node ids. Returns the maximum relative error between
// analytic and central-difference gradients over every parameter element,
// with denominator max(|analytic|, |numeric|, 1e-12).
struct GraphBuild {
    NodeId root;
    std::vector<NodeId> params;
};
using GraphBuilder = std::function<GraphBuild(Graph&, const std::vector<Tensor>&)>;

double grad_check(const GraphBuilder& build, const std::vector<Tensor>& params, double eps);

}  // namespace fsa
