#include "fsa/actnet.hpp"

#include <stdexcept>

namespace fsa {

void ActivationNetworkParams::validate() const {
    if (K < 1) throw std::invalid_argument("activation network order K must be >= 1");
    const std::size_t nout = W.dim(0);
    if (W.ndim() != 2 && W.ndim() != 3)
        throw std::invalid_argument("activation network W must be dense [n_out x n_in] or conv "
                                    "[C_out x C_in x k], got " + W.shape_str());
    if (!b.is_vector() || b.numel() != nout)
        throw std::invalid_argument("activation network b shape " + b.shape_str() +
                                    " inconsistent with W " + W.shape_str());
    const std::vector<std::size_t> want{static_cast<std::size_t>(K) + 1, nout};
    if (V.shape() != want || z.shape() != want)
        throw std::invalid_argument("activation network branch shapes V=" + V.shape_str() +
                                    " z=" + z.shape_str() + " want " + shape_str(want));
    if (!W.all_finite() || !b.all_finite() || !V.all_finite() || !z.all_finite())
        throw std::invalid_argument("activation network parameters must be finite");
}

ActNetNodes register_actnet(Graph& g, const ActivationNetworkParams& p) {
    return {g.param(p.W), g.param(p.b), g.param(p.V), g.param(p.z)};
}

NodeId act_forward(Graph& g, NodeId x, const ActNetNodes& ids, bool per_node_coeffs) {
    NodeId u = g.matmul(ids.W, x);
    const Tensor& vu = g.value(u);
    u = vu.is_vector() ? g.add(u, ids.b) : g.add_col(u, ids.b);
    return g.poly_activation(u, ids.V, ids.z, per_node_coeffs);
}

NodeId act_conv_forward(Graph& g, NodeId x, const ActNetNodes& ids, int stride, int pad,
                        bool per_node_coeffs) {
    NodeId u = g.conv1d(x, ids.W, stride, pad);
    u = g.add_col(u, ids.b);
    return g.poly_activation(u, ids.V, ids.z, per_node_coeffs);
}

Tensor act_forward(const Tensor& x, const ActivationNetworkParams& p) {
    p.validate();
    Graph g;
    NodeId xn = g.input(x);
    NodeId y = act_forward(g, xn, register_actnet(g, p), p.per_node_coeffs);
    return g.value(y);
}

Tensor act_conv_forward(const Tensor& x, const ActivationNetworkParams& p, int stride, int pad) {
    p.validate();
    Graph g;
    NodeId xn = g.input(x);
    NodeId y = act_conv_forward(g, xn, register_actnet(g, p), stride, pad, p.per_node_coeffs);
    return g.value(y);
}

namespace {

ActivationNetworkParams finish_init(Tensor w, std::size_t n_out, int K) {
    ActivationNetworkParams p;
    p.W = std::move(w);
    p.b = Tensor({n_out});
    p.V = Tensor({static_cast<std::size_t>(K) + 1, n_out});
    p.z = Tensor({static_cast<std::size_t>(K) + 1, n_out});
    for (std::size_t i = 0; i < n_out; ++i) p.z[1 * n_out + i] = 1.0;
    p.K = K;
    return p;
}

void fill_fanin_uniform(Tensor& w, std::size_t fan_in, std::mt19937_64& rng) {
    // variance 1/fan_in
    const double s = std::sqrt(3.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-s, s);
    for (std::size_t i = 0; i < w.numel(); ++i) w[i] = dist(rng);
}

}  // namespace

ActivationNetworkParams init_actnet(std::size_t n_in, std::size_t n_out, int K,
                                    std::mt19937_64& rng) {
    if (n_in < 1 || n_out < 1 || K < 1)
        throw std::invalid_argument("init_actnet requires n_in, n_out >= 1 and K >= 1");
    Tensor w({n_out, n_in});
    fill_fanin_uniform(w, n_in, rng);
    return finish_init(std::move(w), n_out, K);
}

ActivationNetworkParams init_actnet_conv(std::size_t c_in, std::size_t c_out,
                                         std::size_t kernel_width, int K, std::mt19937_64& rng) {
    if (c_in < 1 || c_out < 1 || kernel_width < 1 || K < 1)
        throw std::invalid_argument("init_actnet_conv requires positive extents and K >= 1");
    Tensor w({c_out, c_in, kernel_width});
    fill_fanin_uniform(w, c_in * kernel_width, rng);
    return finish_init(std::move(w), c_out, K);
}

}  // namespace fsa
