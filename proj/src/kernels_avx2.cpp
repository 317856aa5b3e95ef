// AVX2+FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma and only reached after a runtime cpuid check.

#include "fsa/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace fsa::kernels {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        __m256d vx = _mm256_loadu_pd(x + i);
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, vx, vy));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void vadd_avx2(const double* a, const double* b, double* c, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(c + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) c[i] = a[i] + b[i];
}

void scal_avx2(double a, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_mul_pd(va, _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) y[i] *= a;
}

void gemm_nn_avx2(const double* a, const double* b, double* c,
                  std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    if (!accumulate) std::memset(c, 0, m * n * sizeof(double));
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t l = 0; l < k; ++l) {
            const double ail = a[i * k + l];
            if (ail == 0.0) continue;
            axpy_avx2(ail, b + l * n, crow, n);
        }
    }
}

void gemm_nt_avx2(const double* a, const double* b, double* c,
                  std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = dot_avx2(arow, b + j * k, k);
            if (accumulate)
                c[i * n + j] += d;
            else
                c[i * n + j] = d;
        }
    }
}

void gemm_tn_avx2(const double* a, const double* b, double* c,
                  std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    if (!accumulate) std::memset(c, 0, m * n * sizeof(double));
    for (std::size_t l = 0; l < k; ++l) {
        const double* arow = a + l * m;
        const double* brow = b + l * n;
        for (std::size_t i = 0; i < m; ++i) {
            if (arow[i] == 0.0) continue;
            axpy_avx2(arow[i], brow, c + i * n, n);
        }
    }
}

void pow_int_avx2(const double* x, double* y, std::size_t n, int k) {
    if (k == 0) {
        std::fill(y, y + n, 1.0);
        return;
    }
    if (k == 1) {
        if (y != x) std::memcpy(y, x, n * sizeof(double));
        return;
    }
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d base = _mm256_loadu_pd(x + i);
        __m256d r = base;
        for (int j = 1; j < k; ++j) r = _mm256_mul_pd(r, base);
        _mm256_storeu_pd(y + i, r);
    }
    for (; i < n; ++i) {
        const double base = x[i];
        double r = base;
        for (int j = 1; j < k; ++j) r *= base;
        y[i] = r;
    }
}

void row_max_avx2(const double* x, std::size_t rows, std::size_t cols,
                  double* maxval, std::size_t* argmax) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = x + r * cols;
        double best;
        if (cols >= 4) {
            __m256d vb = _mm256_loadu_pd(row);
            std::size_t j = 4;
            for (; j + 4 <= cols; j += 4) vb = _mm256_max_pd(vb, _mm256_loadu_pd(row + j));
            alignas(32) double lanes[4];
            _mm256_store_pd(lanes, vb);
            best = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
            for (; j < cols; ++j) best = std::max(best, row[j]);
        } else {
            best = row[0];
            for (std::size_t j = 1; j < cols; ++j) best = std::max(best, row[j]);
        }
        maxval[r] = best;
        if (argmax) {
            // second pass keeps the first-maximal-index contract exact
            std::size_t besti = 0;
            while (row[besti] != best) ++besti;
            argmax[r] = besti;
        }
    }
}

void adam_update_avx2(double* p, double* m, double* v, const double* g,
                      std::size_t n, double lr, double beta1, double beta2,
                      double eps, double bc1, double bc2) {
    const __m256d vb1 = _mm256_set1_pd(beta1);
    const __m256d vb2 = _mm256_set1_pd(beta2);
    const __m256d vb1c = _mm256_set1_pd(1.0 - beta1);
    const __m256d vb2c = _mm256_set1_pd(1.0 - beta2);
    const __m256d vlr = _mm256_set1_pd(lr);
    const __m256d veps = _mm256_set1_pd(eps);
    const __m256d vbc1 = _mm256_set1_pd(bc1);
    const __m256d vbc2 = _mm256_set1_pd(bc2);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vg = _mm256_loadu_pd(g + i);
        __m256d vm = _mm256_loadu_pd(m + i);
        __m256d vv = _mm256_loadu_pd(v + i);
        vm = _mm256_add_pd(_mm256_mul_pd(vb1, vm), _mm256_mul_pd(vb1c, vg));
        vv = _mm256_add_pd(_mm256_mul_pd(vb2, vv), _mm256_mul_pd(vb2c, _mm256_mul_pd(vg, vg)));
        _mm256_storeu_pd(m + i, vm);
        _mm256_storeu_pd(v + i, vv);
        const __m256d mhat = _mm256_div_pd(vm, vbc1);
        const __m256d vhat = _mm256_div_pd(vv, vbc2);
        const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
        const __m256d step = _mm256_div_pd(_mm256_mul_pd(vlr, mhat), denom);
        _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
    }
    for (; i < n; ++i) {
        const double gi = g[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
        v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
        p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
}

}  // namespace

const Ops& avx2_ops() {
    static const Ops table = {
        "avx2",        gemm_nn_avx2, gemm_nt_avx2, gemm_tn_avx2,
        axpy_avx2,     dot_avx2,     vadd_avx2,    scal_avx2,
        pow_int_avx2,  row_max_avx2, adam_update_avx2,
    };
    return table;
}

}  // namespace fsa::kernels
