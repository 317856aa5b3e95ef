#include "fsa/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace fsa::kernels {
namespace {

void gemm_nn_scalar(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    if (!accumulate) std::memset(c, 0, m * n * sizeof(double));
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t l = 0; l < k; ++l) {
            const double ail = a[i * k + l];
            if (ail == 0.0) continue;
            const double* brow = b + l * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += ail * brow[j];
        }
    }
}

void gemm_nt_scalar(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b + j * k;
            double acc = 0.0;
            for (std::size_t l = 0; l < k; ++l) acc += arow[l] * brow[l];
            if (accumulate)
                c[i * n + j] += acc;
            else
                c[i * n + j] = acc;
        }
    }
}

void gemm_tn_scalar(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    if (!accumulate) std::memset(c, 0, m * n * sizeof(double));
    for (std::size_t l = 0; l < k; ++l) {
        const double* arow = a + l * m;
        const double* brow = b + l * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double ali = arow[i];
            if (ali == 0.0) continue;
            double* crow = c + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += ali * brow[j];
        }
    }
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void vadd_scalar(const double* a, const double* b, double* c, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) c[i] = a[i] + b[i];
}

void scal_scalar(double a, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] *= a;
}

void pow_int_scalar(const double* x, double* y, std::size_t n, int k) {
    if (k == 0) {
        std::fill(y, y + n, 1.0);
        return;
    }
    if (k == 1) {
        if (y != x) std::memcpy(y, x, n * sizeof(double));
        return;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double base = x[i];
        double r = base;
        for (int j = 1; j < k; ++j) r *= base;
        y[i] = r;
    }
}

void row_max_scalar(const double* x, std::size_t rows, std::size_t cols,
                    double* maxval, std::size_t* argmax) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = x + r * cols;
        double best = row[0];
        std::size_t besti = 0;
        for (std::size_t j = 1; j < cols; ++j) {
            if (row[j] > best) {
                best = row[j];
                besti = j;
            }
        }
        maxval[r] = best;
        if (argmax) argmax[r] = besti;
    }
}

void adam_update_scalar(double* p, double* m, double* v, const double* g,
                        std::size_t n, double lr, double beta1, double beta2,
                        double eps, double bc1, double bc2) {
    for (std::size_t i = 0; i < n; ++i) {
        const double gi = g[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
        v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace

const Ops& scalar_ops() {
    static const Ops table = {
        "scalar",        gemm_nn_scalar, gemm_nt_scalar, gemm_tn_scalar,
        axpy_scalar,     dot_scalar,     vadd_scalar,    scal_scalar,
        pow_int_scalar,  row_max_scalar, adam_update_scalar,
    };
    return table;
}

}  // namespace fsa::kernels
