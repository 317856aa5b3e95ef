#pragma once

#include <cstddef>

// Low-level compute kernels behind the tensor ops. Every entry has a scalar
// reference implementation; on x86-64 an AVX2+FMA variant is selected at
// runtime when the CPU supports it, on AArch64 a NEON variant. The two paths
// are equivalence-tested against each other in tests/test_kernels.cpp.

namespace fsa::kernels {

struct Ops {
    const char* name;

    // c[m x n] = (or +=) a[m x k] * b[k x n], all row-major.
    void (*gemm_nn)(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n, bool accumulate);
    // c[m x n] = (or +=) a[m x k] * b[n x k]^T
    void (*gemm_nt)(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n, bool accumulate);
    // c[m x n] = (or +=) a[k x m]^T * b[k x n]
    void (*gemm_tn)(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n, bool accumulate);

    // y[i] += a * x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // sum_i x[i] * y[i]
    double (*dot)(const double* x, const double* y, std::size_t n);
    // c[i] = a[i] + b[i]
    void (*vadd)(const double* a, const double* b, double* c, std::size_t n);
    // y[i] *= a
    void (*scal)(double a, double* y, std::size_t n);

    // y[i] = x[i]^k by repeated multiplication; k = 0 gives all ones
    // (0^0 = 1), k = 1 copies bitwise.
    void (*pow_int)(const double* x, double* y, std::size_t n, int k);

    // Per-row maximum of a row-major rows x cols matrix. argmax gets the
    // lowest column index attaining the maximum.
    void (*row_max)(const double* x, std::size_t rows, std::size_t cols,
                    double* maxval, std::size_t* argmax);

    // Bias-corrected adaptive-moment update. bc1/bc2 are the 1-b^t
    // correction denominators for the current step.
    void (*adam_update)(double* p, double* m, double* v, const double* g,
                        std::size_t n, double lr, double beta1, double beta2,
                        double eps, double bc1, double bc2);
};

enum class Isa { scalar, avx2, neon };

const char* isa_name(Isa isa);

// Reference implementation, always available.
const Ops& scalar_ops();

// Currently selected table. Defaults to the best ISA the CPU supports.
const Ops& active();
Isa active_isa();

// Pin a specific table; returns false (and leaves the selection unchanged)
// if the ISA is not available on this machine.
bool select(Isa isa);

// Best ISA supported by the running CPU.
Isa detect_best();

}  // namespace fsa::kernels
