// AVX2+FMA variants. This translation unit is compiled with -mavx2 -mfma;
// callers must check avx2_available() before selecting these.
#include "wdt/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace wdt::kernels {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

void axpby_v(std::size_t n, double a, const double* x, double b, const double* y,
             double* out) {
    const __m256d va = _mm256_set1_pd(a);
    const __m256d vb = _mm256_set1_pd(b);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d r = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        r = _mm256_fmadd_pd(vb, _mm256_loadu_pd(y + i), r);
        _mm256_storeu_pd(out + i, r);
    }
    for (; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void axpy_acc_v(std::size_t n, double a, const double* x, double* out) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d r = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                    _mm256_loadu_pd(out + i));
        _mm256_storeu_pd(out + i, r);
    }
    for (; i < n; ++i) out[i] += a * x[i];
}

void scale_v(std::size_t n, double a, const double* x, double* out) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) out[i] = a * x[i];
}

void hadamard_v(std::size_t n, const double* x, const double* y, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i),
                                                _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) out[i] = x[i] * y[i];
}

void hadamard_acc_v(std::size_t n, const double* x, const double* y, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d r = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i),
                                    _mm256_loadu_pd(out + i));
        _mm256_storeu_pd(out + i, r);
    }
    for (; i < n; ++i) out[i] += x[i] * y[i];
}

double dot_v(std::size_t n, const double* x, const double* y) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4),
                               _mm256_loadu_pd(y + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    double r = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) r += x[i] * y[i];
    return r;
}

double sum_v(std::size_t n, const double* x) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double r = hsum(acc);
    for (; i < n; ++i) r += x[i];
    return r;
}

double sumsq_v(std::size_t n, const double* x) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(x + i);
        acc = _mm256_fmadd_pd(v, v, acc);
    }
    double r = hsum(acc);
    for (; i < n; ++i) r += x[i] * x[i];
    return r;
}

double max_v(std::size_t n, const double* x) {
    if (n < 4) {
        double m = x[0];
        for (std::size_t i = 1; i < n; ++i) m = std::max(m, x[i]);
        return m;
    }
    __m256d vm = _mm256_loadu_pd(x);
    std::size_t i = 4;
    for (; i + 4 <= n; i += 4) vm = _mm256_max_pd(vm, _mm256_loadu_pd(x + i));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, vm);
    double m = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
    for (; i < n; ++i) m = std::max(m, x[i]);
    return m;
}

void gemm_nn_v(std::size_t M, std::size_t N, std::size_t K, const double* A,
               const double* B, double* C, bool accumulate) {
    for (std::size_t i = 0; i < M; ++i) {
        double* c = C + i * N;
        if (!accumulate) std::fill(c, c + N, 0.0);
        const double* a = A + i * K;
        std::size_t k = 0;
        // two rows of B per pass cuts C traffic in half
        for (; k + 2 <= K; k += 2) {
            const __m256d a0 = _mm256_set1_pd(a[k]);
            const __m256d a1 = _mm256_set1_pd(a[k + 1]);
            const double* b0 = B + k * N;
            const double* b1 = b0 + N;
            std::size_t j = 0;
            for (; j + 4 <= N; j += 4) {
                __m256d r = _mm256_loadu_pd(c + j);
                r = _mm256_fmadd_pd(a0, _mm256_loadu_pd(b0 + j), r);
                r = _mm256_fmadd_pd(a1, _mm256_loadu_pd(b1 + j), r);
                _mm256_storeu_pd(c + j, r);
            }
            for (; j < N; ++j) c[j] += a[k] * b0[j] + a[k + 1] * b1[j];
        }
        for (; k < K; ++k) {
            const __m256d ak = _mm256_set1_pd(a[k]);
            const double* b = B + k * N;
            std::size_t j = 0;
            for (; j + 4 <= N; j += 4) {
                __m256d r = _mm256_fmadd_pd(ak, _mm256_loadu_pd(b + j),
                                            _mm256_loadu_pd(c + j));
                _mm256_storeu_pd(c + j, r);
            }
            for (; j < N; ++j) c[j] += a[k] * b[j];
        }
    }
}

void gemm_nt_v(std::size_t M, std::size_t N, std::size_t K, const double* A,
               const double* B, double* C, bool accumulate) {
    for (std::size_t i = 0; i < M; ++i) {
        const double* a = A + i * K;
        double* c = C + i * N;
        for (std::size_t j = 0; j < N; ++j) {
            double d = dot_v(K, a, B + j * K);
            c[j] = accumulate ? c[j] + d : d;
        }
    }
}

void gemm_tn_v(std::size_t M, std::size_t N, std::size_t K, const double* A,
               const double* B, double* C, bool accumulate) {
    if (!accumulate) std::fill(C, C + M * N, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        const double* a = A + k * M;
        const double* b = B + k * N;
        for (std::size_t i = 0; i < M; ++i) {
            const __m256d aki = _mm256_set1_pd(a[i]);
            double* c = C + i * N;
            std::size_t j = 0;
            for (; j + 4 <= N; j += 4) {
                __m256d r = _mm256_fmadd_pd(aki, _mm256_loadu_pd(b + j),
                                            _mm256_loadu_pd(c + j));
                _mm256_storeu_pd(c + j, r);
            }
            for (; j < N; ++j) c[j] += a[i] * b[j];
        }
    }
}

void adamw_v(std::size_t n, double* p, const double* g, double* m, double* v,
             double lr, double beta1, double beta2, double eps, double wd,
             double bc1, double bc2) {
    const __m256d vb1 = _mm256_set1_pd(beta1);
    const __m256d vb1c = _mm256_set1_pd(1.0 - beta1);
    const __m256d vb2 = _mm256_set1_pd(beta2);
    const __m256d vb2c = _mm256_set1_pd(1.0 - beta2);
    const __m256d vlr = _mm256_set1_pd(lr);
    const __m256d veps = _mm256_set1_pd(eps);
    const __m256d vwd = _mm256_set1_pd(wd);
    const __m256d vibc1 = _mm256_set1_pd(1.0 / bc1);
    const __m256d vibc2 = _mm256_set1_pd(1.0 / bc2);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d gi = _mm256_loadu_pd(g + i);
        __m256d mi = _mm256_fmadd_pd(vb1c, gi, _mm256_mul_pd(vb1, _mm256_loadu_pd(m + i)));
        __m256d vi = _mm256_fmadd_pd(vb2c, _mm256_mul_pd(gi, gi),
                                     _mm256_mul_pd(vb2, _mm256_loadu_pd(v + i)));
        _mm256_storeu_pd(m + i, mi);
        _mm256_storeu_pd(v + i, vi);
        const __m256d mhat = _mm256_mul_pd(mi, vibc1);
        const __m256d vhat = _mm256_mul_pd(vi, vibc2);
        const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
        __m256d pi = _mm256_loadu_pd(p + i);
        __m256d upd = _mm256_fmadd_pd(vwd, pi, _mm256_div_pd(mhat, denom));
        pi = _mm256_fnmadd_pd(vlr, upd, pi);
        _mm256_storeu_pd(p + i, pi);
    }
    for (; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + wd * p[i]);
    }
}

}  // namespace

const Ops& avx2_ops() {
    static const Ops ops = {axpby_v,    axpy_acc_v,     scale_v,  hadamard_v,
                            hadamard_acc_v, dot_v,      sum_v,    sumsq_v,
                            max_v,      gemm_nn_v,      gemm_nt_v, gemm_tn_v,
                            adamw_v,    "avx2"};
    return ops;
}

}  // namespace wdt::kernels

#endif  // x86-64
