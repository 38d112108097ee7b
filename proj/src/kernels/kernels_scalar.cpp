#include "wdt/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace wdt::kernels {
namespace {

void axpby_s(std::size_t n, double a, const double* x, double b, const double* y,
             double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void axpy_acc_s(std::size_t n, double a, const double* x, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] += a * x[i];
}

void scale_s(std::size_t n, double a, const double* x, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i];
}

void hadamard_s(std::size_t n, const double* x, const double* y, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void hadamard_acc_s(std::size_t n, const double* x, const double* y, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] += x[i] * y[i];
}

double dot_s(std::size_t n, const double* x, const double* y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double sum_s(std::size_t n, const double* x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double sumsq_s(std::size_t n, const double* x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

double max_s(std::size_t n, const double* x) {
    double m = x[0];
    for (std::size_t i = 1; i < n; ++i) m = std::max(m, x[i]);
    return m;
}

void gemm_nn_s(std::size_t M, std::size_t N, std::size_t K, const double* A,
               const double* B, double* C, bool accumulate) {
    for (std::size_t i = 0; i < M; ++i) {
        double* c = C + i * N;
        if (!accumulate) std::fill(c, c + N, 0.0);
        const double* a = A + i * K;
        for (std::size_t k = 0; k < K; ++k) {
            const double aik = a[k];
            const double* b = B + k * N;
            for (std::size_t j = 0; j < N; ++j) c[j] += aik * b[j];
        }
    }
}

void gemm_nt_s(std::size_t M, std::size_t N, std::size_t K, const double* A,
               const double* B, double* C, bool accumulate) {
    for (std::size_t i = 0; i < M; ++i) {
        const double* a = A + i * K;
        double* c = C + i * N;
        for (std::size_t j = 0; j < N; ++j) {
            double acc = accumulate ? c[j] : 0.0;
            const double* b = B + j * K;
            for (std::size_t k = 0; k < K; ++k) acc += a[k] * b[k];
            c[j] = acc;
        }
    }
}

void gemm_tn_s(std::size_t M, std::size_t N, std::size_t K, const double* A,
               const double* B, double* C, bool accumulate) {
    if (!accumulate) std::fill(C, C + M * N, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        const double* a = A + k * M;
        const double* b = B + k * N;
        for (std::size_t i = 0; i < M; ++i) {
            const double aki = a[i];
            double* c = C + i * N;
            for (std::size_t j = 0; j < N; ++j) c[j] += aki * b[j];
        }
    }
}

void adamw_s(std::size_t n, double* p, const double* g, double* m, double* v,
             double lr, double beta1, double beta2, double eps, double wd,
             double bc1, double bc2) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + wd * p[i]);
    }
}

}  // namespace

const Ops& scalar_ops() {
    static const Ops ops = {axpby_s,    axpy_acc_s,     scale_s,  hadamard_s,
                            hadamard_acc_s, dot_s,      sum_s,    sumsq_s,
                            max_s,      gemm_nn_s,      gemm_nt_s, gemm_tn_s,
                            adamw_s,    "scalar"};
    return ops;
}

}  // namespace wdt::kernels
