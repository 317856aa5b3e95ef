// NEON (AArch64 float64x2) kernel variants. Only compiled on aarch64, where
// NEON is baseline.

#include "fsa/kernels.hpp"

#include <arm_neon.h>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace fsa::kernels {
namespace {

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

double dot_neon(const double* x, const double* y, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
    }
    for (; i + 2 <= n; i += 2) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
    }
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void vadd_neon(const double* a, const double* b, double* c, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(c + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    }
    for (; i < n; ++i) c[i] = a[i] + b[i];
}

void scal_neon(double a, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vmulq_f64(va, vld1q_f64(y + i)));
    }
    for (; i < n; ++i) y[i] *= a;
}

void gemm_nn_neon(const double* a, const double* b, double* c,
                  std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    if (!accumulate) std::memset(c, 0, m * n * sizeof(double));
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t l = 0; l < k; ++l) {
            const double ail = a[i * k + l];
            if (ail == 0.0) continue;
            axpy_neon(ail, b + l * n, crow, n);
        }
    }
}

void gemm_nt_neon(const double* a, const double* b, double* c,
                  std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = dot_neon(arow, b + j * k, k);
            if (accumulate)
                c[i * n + j] += d;
            else
                c[i * n + j] = d;
        }
    }
}

void gemm_tn_neon(const double* a, const double* b, double* c,
                  std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    if (!accumulate) std::memset(c, 0, m * n * sizeof(double));
    for (std::size_t l = 0; l < k; ++l) {
        const double* arow = a + l * m;
        const double* brow = b + l * n;
        for (std::size_t i = 0; i < m; ++i) {
            if (arow[i] == 0.0) continue;
            axpy_neon(arow[i], brow, c + i * n, n);
        }
    }
}

void pow_int_neon(const double* x, double* y, std::size_t n, int k) {
    if (k == 0) {
        std::fill(y, y + n, 1.0);
        return;
    }
    if (k == 1) {
        if (y != x) std::memcpy(y, x, n * sizeof(double));
        return;
    }
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t base = vld1q_f64(x + i);
        float64x2_t r = base;
        for (int j = 1; j < k; ++j) r = vmulq_f64(r, base);
        vst1q_f64(y + i, r);
    }
    for (; i < n; ++i) {
        const double base = x[i];
        double r = base;
        for (int j = 1; j < k; ++j) r *= base;
        y[i] = r;
    }
}

void row_max_neon(const double* x, std::size_t rows, std::size_t cols,
                  double* maxval, std::size_t* argmax) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = x + r * cols;
        double best;
        if (cols >= 2) {
            float64x2_t vb = vld1q_f64(row);
            std::size_t j = 2;
            for (; j + 2 <= cols; j += 2) vb = vmaxq_f64(vb, vld1q_f64(row + j));
            best = vmaxvq_f64(vb);
            for (; j < cols; ++j) best = std::max(best, row[j]);
        } else {
            best = row[0];
        }
        maxval[r] = best;
        if (argmax) {
            std::size_t besti = 0;
            while (row[besti] != best) ++besti;
            argmax[r] = besti;
        }
    }
}

void adam_update_neon(double* p, double* m, double* v, const double* g,
                      std::size_t n, double lr, double beta1, double beta2,
                      double eps, double bc1, double bc2) {
    const float64x2_t vb1 = vdupq_n_f64(beta1);
    const float64x2_t vb2 = vdupq_n_f64(beta2);
    const float64x2_t vb1c = vdupq_n_f64(1.0 - beta1);
    const float64x2_t vb2c = vdupq_n_f64(1.0 - beta2);
    const float64x2_t vlr = vdupq_n_f64(lr);
    const float64x2_t veps = vdupq_n_f64(eps);
    const float64x2_t vbc1 = vdupq_n_f64(bc1);
    const float64x2_t vbc2 = vdupq_n_f64(bc2);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t vg = vld1q_f64(g + i);
        float64x2_t vm = vld1q_f64(m + i);
        float64x2_t vv = vld1q_f64(v + i);
        vm = vaddq_f64(vmulq_f64(vb1, vm), vmulq_f64(vb1c, vg));
        vv = vaddq_f64(vmulq_f64(vb2, vv), vmulq_f64(vb2c, vmulq_f64(vg, vg)));
        vst1q_f64(m + i, vm);
        vst1q_f64(v + i, vv);
        const float64x2_t mhat = vdivq_f64(vm, vbc1);
        const float64x2_t vhat = vdivq_f64(vv, vbc2);
        const float64x2_t denom = vaddq_f64(vsqrtq_f64(vhat), veps);
        const float64x2_t step = vdivq_f64(vmulq_f64(vlr, mhat), denom);
        vst1q_f64(p + i, vsubq_f64(vld1q_f64(p + i), step));
    }
    for (; i < n; ++i) {
        const double gi = g[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
        v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
        p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
}

}  // namespace

const Ops& neon_ops() {
    static const Ops table = {
        "neon",        gemm_nn_neon, gemm_nt_neon, gemm_tn_neon,
        axpy_neon,     dot_neon,     vadd_neon,    scal_neon,
        pow_int_neon,  row_max_neon, adam_update_neon,
    };
    return table;
}

}  // namespace fsa::kernels
