#pragma once

#include <random>

#include "fsa/graph.hpp"
#include "fsa/tensor.hpp"

namespace fsa {

// One activation-network layer: a linear map whose polynomial activation
// coefficients are produced by a trainable branch network. W is
// [n_out x n_in] for the dense form or [C_out x C_in x k] for the
// convolutional form; V and z are [(K+1) x n_out].
struct ActivationNetworkParams {
    Tensor W;
    Tensor b;
    Tensor V;
    Tensor z;
    int K = 3;
    // When set, each node's coefficients depend only on its own
    // pre-activation instead of the shared sum over all nodes.
    bool per_node_coeffs = false;

    std::size_t n_out() const { return b.numel(); }
    void validate() const;
};

// Node ids of one layer's parameters inside a graph.
struct ActNetNodes {
    NodeId W, b, V, z;
};

ActNetNodes register_actnet(Graph& g, const ActivationNetworkParams& p);

// u = Wx + b followed by the branch-network polynomial activation.
// x is [n_in] or [n_in x batch].
NodeId act_forward(Graph& g, NodeId x, const ActNetNodes& ids, bool per_node_coeffs);

// Convolutional form: the linear map runs as a 1-D convolution (equivalent
// to the dense map applied to every Toeplitz column of the unrolled input),
// activation applied per output element.
NodeId act_conv_forward(Graph& g, NodeId x, const ActNetNodes& ids, int stride, int pad,
                        bool per_node_coeffs);

// Forward-only conveniences on plain tensors.
Tensor act_forward(const Tensor& x, const ActivationNetworkParams& p);
Tensor act_conv_forward(const Tensor& x, const ActivationNetworkParams& p, int stride, int pad);

// Fan-in-scaled uniform init for W; V = 0 and z's k=1 row set to 1, so the
// layer starts as an exact linear map and learns its non-linearity.
ActivationNetworkParams init_actnet(std::size_t n_in, std::size_t n_out, int K,
                                    std::mt19937_64& rng);
ActivationNetworkParams init_actnet_conv(std::size_t c_in, std::size_t c_out,
                                         std::size_t kernel_width, int K, std::mt19937_64& rng);

}  // namespace fsa
