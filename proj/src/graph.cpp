#include "fsa/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fsa/kernels.hpp"

namespace fsa {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

// Columns-of-a-matrix view: a 1-D tensor is an n x 1 column.
std::size_t mat_rows(const Tensor& t) { return t.rows(); }
std::size_t mat_cols(const Tensor& t) { return t.cols(); }

}  // namespace

const char* op_name(OpKind k) {
    switch (k) {
        case OpKind::input: return "input";
        case OpKind::param: return "param";
        case OpKind::add: return "add";
        case OpKind::add_col: return "add_col";
        case OpKind::matmul: return "matmul";
        case OpKind::conv1d: return "conv1d";
        case OpKind::pow_int: return "pow_int";
        case OpKind::relu: return "relu";
        case OpKind::poly_act: return "poly_act";
        case OpKind::max_pool_time: return "max_pool_time";
        case OpKind::concat: return "concat";
        case OpKind::sum: return "sum";
        case OpKind::softmax_xent: return "softmax_xent";
    }
    return "?";
}

NodeId Graph::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Graph::input(Tensor v) {
    return push({OpKind::input, std::move(v), {}, {}, false, nullptr});
}

NodeId Graph::param(Tensor v) {
    return push({OpKind::param, std::move(v), {}, {}, true, nullptr});
}

Tensor& Graph::grad_ref(NodeId id) {
    Node& n = nodes_[id];
    if (n.grad.numel() == 0) n.grad = Tensor(n.value.shape());
    return n.grad;
}

const Tensor& Graph::grad(NodeId id) { return grad_ref(id); }

double Graph::scalar_value(NodeId id) const {
    const Tensor& v = nodes_[id].value;
    if (v.numel() != 1) fail("scalar_value on tensor " + v.shape_str());
    return v[0];
}

NodeId Graph::add(NodeId a, NodeId b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    if (!same_shape(va, vb))
        fail("add shape mismatch: " + va.shape_str() + " vs " + vb.shape_str());
    Tensor out(va.shape());
    kernels::active().vadd(va.data(), vb.data(), out.data(), out.numel());
    Node n{OpKind::add, std::move(out), {}, {a, b}, false,
           [a, b](Graph& g, NodeId self) {
               const Tensor& go = g.grad_ref(self);
               kernels::active().axpy(1.0, go.data(), g.grad_ref(a).data(), go.numel());
               kernels::active().axpy(1.0, go.data(), g.grad_ref(b).data(), go.numel());
           }};
    return push(std::move(n));
}

NodeId Graph::add_col(NodeId x, NodeId bias) {
    const Tensor& vx = value(x);
    const Tensor& vb = value(bias);
    if (!vx.is_matrix() || !vb.is_vector() || vb.numel() != vx.dim(0))
        fail("add_col expects [CxT] and [C], got " + vx.shape_str() + " and " + vb.shape_str());
    const std::size_t c = vx.dim(0), t = vx.dim(1);
    Tensor out(vx.shape());
    for (std::size_t i = 0; i < c; ++i) {
        const double bi = vb[i];
        for (std::size_t j = 0; j < t; ++j) out[i * t + j] = vx[i * t + j] + bi;
    }
    Node n{OpKind::add_col, std::move(out), {}, {x, bias}, false,
           [x, bias, c, t](Graph& g, NodeId self) {
               const Tensor& go = g.grad_ref(self);
               Tensor& gx = g.grad_ref(x);
               Tensor& gb = g.grad_ref(bias);
               kernels::active().axpy(1.0, go.data(), gx.data(), go.numel());
               for (std::size_t i = 0; i < c; ++i) {
                   double acc = 0.0;
                   for (std::size_t j = 0; j < t; ++j) acc += go[i * t + j];
                   gb[i] += acc;
               }
           }};
    return push(std::move(n));
}

NodeId Graph::matmul(NodeId a, NodeId b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    if (!va.is_matrix() || (!vb.is_matrix() && !vb.is_vector()))
        fail("matmul shape mismatch: " + va.shape_str() + " vs " + vb.shape_str());
    const std::size_t m = va.dim(0), k = va.dim(1);
    const std::size_t n = mat_cols(vb);
    if (mat_rows(vb) != k)
        fail("matmul shape mismatch: " + va.shape_str() + " vs " + vb.shape_str());
    Tensor out = vb.is_vector() ? Tensor({m}) : Tensor({m, n});
    kernels::active().gemm_nn(va.data(), vb.data(), out.data(), m, k, n, false);
    Node node{OpKind::matmul, std::move(out), {}, {a, b}, false,
              [a, b, m, k, n](Graph& g, NodeId self) {
                  const Tensor& go = g.grad_ref(self);
                  const Tensor& va = g.value(a);
                  const Tensor& vb = g.value(b);
                  // dL/da = dL/dy . b^T, dL/db = a^T . dL/dy
                  kernels::active().gemm_nt(go.data(), vb.data(), g.grad_ref(a).data(), m, n, k, true);
                  kernels::active().gemm_tn(va.data(), go.data(), g.grad_ref(b).data(), k, m, n, true);
              }};
    return push(std::move(node));
}

NodeId Graph::conv1d(NodeId x, NodeId w, int stride, int pad) {
    const Tensor& vx = value(x);
    const Tensor& vw = value(w);
    if (vw.ndim() != 3) fail("conv1d kernels must be [C_out x C_in x k], got " + vw.shape_str());
    const bool x_is_vec = vx.is_vector();
    if (!x_is_vec && !vx.is_matrix())
        fail("conv1d input must be [C_in x T], got " + vx.shape_str());
    const std::size_t cin = x_is_vec ? 1 : vx.dim(0);
    const std::size_t tin = x_is_vec ? vx.dim(0) : vx.dim(1);
    const std::size_t cout = vw.dim(0);
    const std::size_t k = vw.dim(2);
    if (vw.dim(1) != cin)
        fail("conv1d channel mismatch: input " + vx.shape_str() + ", kernels " + vw.shape_str());
    if (stride < 1) fail("conv1d stride must be >= 1");
    if (pad < 0) fail("conv1d pad must be >= 0");
    if (k > tin + 2 * static_cast<std::size_t>(pad))
        fail("sequence too short for kernel: T=" + std::to_string(tin) + " pad=" +
             std::to_string(pad) + " k=" + std::to_string(k));
    const std::size_t tout = (tin + 2 * pad - k) / stride + 1;

    Tensor out({cout, tout});
    const auto& K = kernels::active();
    for (std::size_t o = 0; o < cout; ++o) {
        double* yrow = out.data() + o * tout;
        for (std::size_t c = 0; c < cin; ++c) {
            const double* xrow = vx.data() + c * tin;
            for (std::size_t i = 0; i < k; ++i) {
                const double wv = vw[(o * cin + c) * k + i];
                if (wv == 0.0) continue;
                const long off = static_cast<long>(i) - pad;  // x index at t'=0
                if (stride == 1) {
                    const long lo = std::max(0L, -off);
                    const long hi = std::min<long>(tout - 1, static_cast<long>(tin) - 1 - off);
                    if (lo <= hi) K.axpy(wv, xrow + lo + off, yrow + lo, hi - lo + 1);
                } else {
                    for (std::size_t t = 0; t < tout; ++t) {
                        const long xi = static_cast<long>(t * stride) + off;
                        if (xi >= 0 && xi < static_cast<long>(tin)) yrow[t] += wv * xrow[xi];
                    }
                }
            }
        }
    }
    Node node{OpKind::conv1d, std::move(out), {}, {x, w}, false,
              [x, w, stride, pad, cin, tin, cout, tout, k](Graph& g, NodeId self) {
                  const Tensor& go = g.grad_ref(self);
                  const Tensor& vx = g.value(x);
                  const Tensor& vw = g.value(w);
                  Tensor& gx = g.grad_ref(x);
                  Tensor& gw = g.grad_ref(w);
                  const auto& K = kernels::active();
                  for (std::size_t o = 0; o < cout; ++o) {
                      const double* grow = go.data() + o * tout;
                      for (std::size_t c = 0; c < cin; ++c) {
                          const double* xrow = vx.data() + c * tin;
                          double* gxrow = gx.data() + c * tin;
                          for (std::size_t i = 0; i < k; ++i) {
                              const double wv = vw[(o * cin + c) * k + i];
                              const long off = static_cast<long>(i) - pad;
                              if (stride == 1) {
                                  const long lo = std::max(0L, -off);
                                  const long hi =
                                      std::min<long>(tout - 1, static_cast<long>(tin) - 1 - off);
                                  if (lo > hi) continue;
                                  const std::size_t len = hi - lo + 1;
                                  if (wv != 0.0) K.axpy(wv, grow + lo, gxrow + lo + off, len);
                                  gw[(o * cin + c) * k + i] +=
                                      K.dot(grow + lo, xrow + lo + off, len);
                              } else {
                                  double acc = 0.0;
                                  for (std::size_t t = 0; t < tout; ++t) {
                                      const long xi = static_cast<long>(t * stride) + off;
                                      if (xi < 0 || xi >= static_cast<long>(tin)) continue;
                                      gxrow[xi] += wv * grow[t];
                                      acc += grow[t] * xrow[xi];
                                  }
                                  gw[(o * cin + c) * k + i] += acc;
                              }
                          }
                      }
                  }
              }};
    return push(std::move(node));
}

NodeId Graph::elementwise_pow(NodeId x, int k) {
    if (k < 0) fail("elementwise_pow exponent must be >= 0");
    const Tensor& vx = value(x);
    Tensor out(vx.shape());
    kernels::active().pow_int(vx.data(), out.data(), vx.numel(), k);
    Node n{OpKind::pow_int, std::move(out), {}, {x}, false,
           [x, k](Graph& g, NodeId self) {
               if (k == 0) return;  // derivative defined as 0 everywhere
               const Tensor& go = g.grad_ref(self);
               const Tensor& vx = g.value(x);
               Tensor& gx = g.grad_ref(x);
               if (k == 1) {
                   kernels::active().axpy(1.0, go.data(), gx.data(), go.numel());
                   return;
               }
               Tensor pm1(vx.shape());
               kernels::active().pow_int(vx.data(), pm1.data(), vx.numel(), k - 1);
               for (std::size_t i = 0; i < go.numel(); ++i)
                   gx[i] += go[i] * static_cast<double>(k) * pm1[i];
           }};
    return push(std::move(n));
}

NodeId Graph::relu(NodeId x) {
    const Tensor& vx = value(x);
    Tensor out(vx.shape());
    for (std::size_t i = 0; i < vx.numel(); ++i) out[i] = vx[i] > 0.0 ? vx[i] : 0.0;
    Node n{OpKind::relu, std::move(out), {}, {x}, false,
           [x](Graph& g, NodeId self) {
               const Tensor& go = g.grad_ref(self);
               const Tensor& vx = g.value(x);
               Tensor& gx = g.grad_ref(x);
               for (std::size_t i = 0; i < go.numel(); ++i)
                   if (vx[i] > 0.0) gx[i] += go[i];
           }};
    return push(std::move(n));
}

NodeId Graph::poly_activation(NodeId u, NodeId v, NodeId z, bool per_node) {
    const Tensor& vu = value(u);
    const Tensor& vv = value(v);
    const Tensor& vz = value(z);
    if (!vu.is_matrix() && !vu.is_vector())
        fail("poly_activation input must be [CxT] or [C], got " + vu.shape_str());
    const std::size_t c = vu.rows();
    const std::size_t t = vu.cols();
    if (!vv.is_matrix() || vv.dim(0) < 2 || vv.dim(1) != c)
        fail("poly_activation branch weights must be [(K+1)xC] with K>=1, got " + vv.shape_str() +
             " for input " + vu.shape_str());
    if (!same_shape(vv, vz))
        fail("poly_activation branch bias shape " + vz.shape_str() + " != weights " + vv.shape_str());
    const std::size_t korder = vv.dim(0) - 1;  // polynomial order K

    // Data-dependent coefficient part. Shared: s[k,t] = sum_j V[k,j] u[j,t],
    // one coefficient row per time column, shared across output nodes.
    Tensor s;
    if (!per_node) {
        s = Tensor({korder + 1, t});
        kernels::active().gemm_nn(vv.data(), vu.data(), s.data(), korder + 1, c, t, false);
    }
    Tensor out(vu.shape());
    for (std::size_t i = 0; i < c; ++i) {
        for (std::size_t j = 0; j < t; ++j) {
            const double ui = vu[i * t + j];
            double up = 1.0;  // ui^k, ascending
            double acc = 0.0;
            for (std::size_t k = 0; k <= korder; ++k) {
                const double ak =
                    (per_node ? vv[k * c + i] * ui : s[k * t + j]) + vz[k * c + i];
                acc += ak * up;
                up *= ui;
            }
            out[i * t + j] = acc;
        }
    }

    Node n{OpKind::poly_act, std::move(out), {}, {u, v, z}, false,
           [u, v, z, per_node, c, t, korder, s = std::move(s)](Graph& g, NodeId self) {
               const Tensor& go = g.grad_ref(self);
               const Tensor& vu = g.value(u);
               const Tensor& vv = g.value(v);
               const Tensor& vz = g.value(z);
               Tensor& gu = g.grad_ref(u);
               Tensor& gv = g.grad_ref(v);
               Tensor& gz = g.grad_ref(z);
               std::vector<double> up(korder + 2);
               if (per_node) {
                   for (std::size_t i = 0; i < c; ++i) {
                       for (std::size_t j = 0; j < t; ++j) {
                           const double ui = vu[i * t + j];
                           const double gij = go[i * t + j];
                           up[0] = 1.0;
                           for (std::size_t k = 1; k <= korder + 1; ++k) up[k] = up[k - 1] * ui;
                           double du = 0.0;
                           for (std::size_t k = 0; k <= korder; ++k) {
                               const double vk = vv[k * c + i];
                               const double zk = vz[k * c + i];
                               gz[k * c + i] += gij * up[k];
                               gv[k * c + i] += gij * up[k + 1];
                               // d/du of (vk*u + zk)*u^k
                               du += vk * (k + 1) * up[k];
                               if (k >= 1) du += zk * k * up[k - 1];
                           }
                           gu[i * t + j] += gij * du;
                       }
                   }
                   return;
               }
               Tensor ds({korder + 1, t});
               for (std::size_t i = 0; i < c; ++i) {
                   for (std::size_t j = 0; j < t; ++j) {
                       const double ui = vu[i * t + j];
                       const double gij = go[i * t + j];
                       up[0] = 1.0;
                       for (std::size_t k = 1; k <= korder + 1; ++k) up[k] = up[k - 1] * ui;
                       double du = 0.0;
                       for (std::size_t k = 0; k <= korder; ++k) {
                           const double ak = s[k * t + j] + vz[k * c + i];
                           ds[k * t + j] += gij * up[k];
                           gz[k * c + i] += gij * up[k];
                           if (k >= 1) du += ak * k * up[k - 1];
                       }
                       gu[i * t + j] += gij * du;
                   }
               }
               // chain through s = V u: dV += ds u^T, du += V^T ds
               kernels::active().gemm_nt(ds.data(), vu.data(), gv.data(), korder + 1, t, c, true);
               kernels::active().gemm_tn(vv.data(), ds.data(), gu.data(), c, korder + 1, t, true);
           }};
    return push(std::move(n));
}

NodeId Graph::global_max_pool_time(NodeId x) {
    const Tensor& vx = value(x);
    if (!vx.is_matrix()) fail("global_max_pool_time expects [CxT], got " + vx.shape_str());
    const std::size_t c = vx.dim(0), t = vx.dim(1);
    Tensor out({c});
    std::vector<std::size_t> argmax(c);
    kernels::active().row_max(vx.data(), c, t, out.data(), argmax.data());
    Node n{OpKind::max_pool_time, std::move(out), {}, {x}, false,
           [x, c, t, argmax = std::move(argmax)](Graph& g, NodeId self) {
               const Tensor& go = g.grad_ref(self);
               Tensor& gx = g.grad_ref(x);
               for (std::size_t i = 0; i < c; ++i) gx[i * t + argmax[i]] += go[i];
           }};
    return push(std::move(n));
}

NodeId Graph::concat(const std::vector<NodeId>& parts) {
    if (parts.empty()) fail("concat of zero tensors");
    std::size_t total = 0;
    for (NodeId p : parts) {
        if (!value(p).is_vector()) fail("concat expects vectors, got " + value(p).shape_str());
        total += value(p).numel();
    }
    Tensor out({total});
    std::size_t off = 0;
    for (NodeId p : parts) {
        const Tensor& vp = value(p);
        std::copy(vp.data(), vp.data() + vp.numel(), out.data() + off);
        off += vp.numel();
    }
    Node n{OpKind::concat, std::move(out), {}, parts, false,
           [parts](Graph& g, NodeId self) {
               const Tensor& go = g.grad_ref(self);
               std::size_t off = 0;
               for (NodeId p : parts) {
                   Tensor& gp = g.grad_ref(p);
                   kernels::active().axpy(1.0, go.data() + off, gp.data(), gp.numel());
                   off += gp.numel();
               }
           }};
    return push(std::move(n));
}

NodeId Graph::sum(NodeId x) {
    const Tensor& vx = value(x);
    double acc = 0.0;
    for (std::size_t i = 0; i < vx.numel(); ++i) acc += vx[i];
    Node n{OpKind::sum, Tensor::scalar(acc), {}, {x}, false,
           [x](Graph& g, NodeId self) {
               const double go = g.grad_ref(self)[0];
               Tensor& gx = g.grad_ref(x);
               for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += go;
           }};
    return push(std::move(n));
}

NodeId Graph::softmax_cross_entropy(NodeId logits, std::size_t label) {
    const Tensor& vl = value(logits);
    if (!vl.is_vector()) fail("softmax_cross_entropy expects a logit vector, got " + vl.shape_str());
    const std::size_t c = vl.numel();
    if (label >= c)
        fail("label " + std::to_string(label) + " out of range for " + std::to_string(c) +
             " classes");
    const double mx = *std::max_element(vl.data(), vl.data() + c);
    double se = 0.0;
    for (std::size_t i = 0; i < c; ++i) se += std::exp(vl[i] - mx);
    const double lse = mx + std::log(se);
    Tensor probs({c});
    for (std::size_t i = 0; i < c; ++i) probs[i] = std::exp(vl[i] - lse);
    const double loss = lse - vl[label];
    Node n{OpKind::softmax_xent, Tensor::scalar(loss), {}, {logits}, false,
           [logits, label, probs = std::move(probs)](Graph& g, NodeId self) {
               const double go = g.grad_ref(self)[0];
               Tensor& gl = g.grad_ref(logits);
               for (std::size_t i = 0; i < gl.numel(); ++i)
                   gl[i] += go * (probs[i] - (i == label ? 1.0 : 0.0));
           }};
    return push(std::move(n));
}

void Graph::backward(NodeId root) {
    if (root >= nodes_.size()) fail("backward root out of range");
    if (nodes_[root].value.numel() != 1)
        fail("backward root must be scalar, got " + nodes_[root].value.shape_str());
    grad_ref(root)[0] = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        Node& n = nodes_[i];
        if (n.grad.numel() == 0) continue;  // not on a path to the root
        if (n.backward_fn) n.backward_fn(*this, static_cast<NodeId>(i));
    }
    // unreached leaves still report zeros of their own shape
    for (auto& n : nodes_)
        if (n.leaf && n.grad.numel() == 0) n.grad = Tensor(n.value.shape());
}

double grad_check(const GraphBuilder& build, const std::vector<Tensor>& params, double eps) {
    if (!(eps >= 1e-7 && eps <= 1e-3))
        throw std::invalid_argument("grad_check eps must lie in [1e-7, 1e-3]");

    Graph g;
    GraphBuild b = build(g, params);
    if (b.params.size() != params.size())
        throw std::logic_error("grad_check builder registered a different parameter count");
    const double base = g.scalar_value(b.root);
    if (!std::isfinite(base)) throw std::runtime_error("grad_check: non-finite loss");
    g.backward(b.root);
    std::vector<Tensor> analytic;
    analytic.reserve(params.size());
    for (NodeId id : b.params) analytic.push_back(g.grad(id));

    auto eval = [&](const std::vector<Tensor>& p) {
        Graph gg;
        GraphBuild bb = build(gg, p);
        const double l = gg.scalar_value(bb.root);
        if (!std::isfinite(l)) throw std::runtime_error("grad_check: non-finite loss");
        return l;
    };

    double max_rel = 0.0;
    std::vector<Tensor> work = params;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        for (std::size_t e = 0; e < params[pi].numel(); ++e) {
            const double orig = work[pi][e];
            work[pi][e] = orig + eps;
            const double lp = eval(work);
            work[pi][e] = orig - eps;
            const double lm = eval(work);
            work[pi][e] = orig;
            const double numeric = (lp - lm) / (2.0 * eps);
            const double a = analytic[pi][e];
            const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-12});
            max_rel = std::max(max_rel, std::fabs(a - numeric) / denom);
        }
    }
    return max_rel;
}

}  // namespace fsa
