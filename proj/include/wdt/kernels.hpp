#pragma once

#include <cstddef>

// Data-parallel arithmetic kernels behind the model and schedule hot loops.
// Every kernel has a scalar reference implementation and (on x86-64) an AVX2+FMA
// variant; the active set is chosen once at startup from CPUID and can be forced
// with the WDT_KERNEL_ISA environment variable ("scalar" or "avx2").
// SIMD variants may reorder floating-point accumulation, so results agree with
// the scalar reference to rounding, not bit-exactly; within one process the
// selection is fixed, keeping runs deterministic.

namespace wdt::kernels {

struct Ops {
    // out[i] = a*x[i] + b*y[i]
    void (*axpby)(std::size_t n, double a, const double* x, double b,
                  const double* y, double* out);
    // out[i] += a*x[i]
    void (*axpy_acc)(std::size_t n, double a, const double* x, double* out);
    // out[i] = a*x[i]
    void (*scale)(std::size_t n, double a, const double* x, double* out);
    // out[i] = x[i]*y[i]
    void (*hadamard)(std::size_t n, const double* x, const double* y, double* out);
    // out[i] += x[i]*y[i]
    void (*hadamard_acc)(std::size_t n, const double* x, const double* y, double* out);

    double (*dot)(std::size_t n, const double* x, const double* y);
    double (*sum)(std::size_t n, const double* x);
    double (*sumsq)(std::size_t n, const double* x);
    double (*max)(std::size_t n, const double* x);

    // C[M,N] = A[M,K] * B[K,N]          (row-major, accumulate optionally)
    void (*gemm_nn)(std::size_t M, std::size_t N, std::size_t K,
                    const double* A, const double* B, double* C, bool accumulate);
    // C[M,N] = A[M,K] * B[N,K]^T
    void (*gemm_nt)(std::size_t M, std::size_t N, std::size_t K,
                    const double* A, const double* B, double* C, bool accumulate);
    // C[M,N] = A[K,M]^T * B[K,N]
    void (*gemm_tn)(std::size_t M, std::size_t N, std::size_t K,
                    const double* A, const double* B, double* C, bool accumulate);

    // Decoupled-weight-decay Adam step on a parameter slice.
    // bc1 = 1 - beta1^step, bc2 = 1 - beta2^step (precomputed by the caller).
    void (*adamw)(std::size_t n, double* p, const double* g, double* m, double* v,
                  double lr, double beta1, double beta2, double eps, double wd,
                  double bc1, double bc2);

    const char* name;
};

const Ops& scalar_ops();
bool avx2_available();
#if defined(__x86_64__) || defined(_M_X64)
const Ops& avx2_ops();
#endif

// Active set, resolved once (thread-safe).
const Ops& ops();

}  // namespace wdt::kernels
