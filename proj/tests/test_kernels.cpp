#include <doctest.h>

#include <cmath>
#include <vector>

#include "wdt/kernels.hpp"
#include "wdt/rng.hpp"

using namespace wdt;
namespace k = wdt::kernels;

namespace {

std::vector<double> randvec(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    return v;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b,
                 double tol) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double scale = std::max({1.0, std::fabs(a[i]), std::fabs(b[i])});
        CHECK(std::fabs(a[i] - b[i]) / scale <= tol);
    }
}

}  // namespace

TEST_CASE("scalar kernels: basic identities") {
    const auto& ops = k::scalar_ops();
    Rng rng(1);
    const auto x = randvec(rng, 37), y = randvec(rng, 37);
    std::vector<double> out(37);
    ops.axpby(37, 2.0, x.data(), -1.0, y.data(), out.data());
    for (std::size_t i = 0; i < 37; ++i)
        CHECK(out[i] == doctest::Approx(2 * x[i] - y[i]).epsilon(1e-15));
    CHECK(ops.dot(37, x.data(), x.data()) == doctest::Approx(ops.sumsq(37, x.data())));
    double mx = x[0];
    for (double v : x) mx = std::max(mx, v);
    CHECK(ops.max(37, x.data()) == mx);
}

TEST_CASE("scalar gemm against a pencil-and-paper case") {
    // A = [1 2; 3 4], B = [5 6; 7 8]
    const std::vector<double> A = {1, 2, 3, 4}, B = {5, 6, 7, 8};
    std::vector<double> C(4);
    k::scalar_ops().gemm_nn(2, 2, 2, A.data(), B.data(), C.data(), false);
    CHECK(C == std::vector<double>{19, 22, 43, 50});
    k::scalar_ops().gemm_nt(2, 2, 2, A.data(), B.data(), C.data(), false);
    CHECK(C == std::vector<double>{17, 23, 39, 53});
    k::scalar_ops().gemm_tn(2, 2, 2, A.data(), B.data(), C.data(), false);
    CHECK(C == std::vector<double>{26, 30, 38, 44});
}

#if defined(__x86_64__) || defined(_M_X64)
TEST_CASE("avx2 kernels match the scalar reference") {
    if (!k::avx2_available()) return;
    const auto& s = k::scalar_ops();
    const auto& v = k::avx2_ops();
    Rng rng(7);
    for (std::size_t n : {1UL, 3UL, 4UL, 8UL, 17UL, 64UL, 129UL, 1000UL}) {
        const auto x = randvec(rng, n), y = randvec(rng, n);
        std::vector<double> a(n), b(n);
        s.axpby(n, 1.3, x.data(), -0.7, y.data(), a.data());
        v.axpby(n, 1.3, x.data(), -0.7, y.data(), b.data());
        check_close(a, b, 1e-15);
        s.hadamard(n, x.data(), y.data(), a.data());
        v.hadamard(n, x.data(), y.data(), b.data());
        check_close(a, b, 1e-15);
        CHECK(std::fabs(s.dot(n, x.data(), y.data()) - v.dot(n, x.data(), y.data())) /
                  std::max(1.0, std::fabs(s.dot(n, x.data(), y.data()))) <=
              1e-13);
        CHECK(s.max(n, x.data()) == v.max(n, x.data()));
        CHECK(std::fabs(s.sum(n, x.data()) - v.sum(n, x.data())) <= 1e-12);
        CHECK(std::fabs(s.sumsq(n, x.data()) - v.sumsq(n, x.data())) /
                  std::max(1.0, s.sumsq(n, x.data())) <=
              1e-13);
    }
}

TEST_CASE("avx2 gemm variants match scalar on random shapes") {
    if (!k::avx2_available()) return;
    const auto& s = k::scalar_ops();
    const auto& v = k::avx2_ops();
    Rng rng(11);
    const int shapes[][3] = {{1, 1, 1}, {3, 5, 7}, {16, 16, 16}, {33, 9, 21}, {8, 100, 12}};
    for (const auto& sh : shapes) {
        const std::size_t M = sh[0], N = sh[1], K = sh[2];
        const auto A = randvec(rng, M * K), Bn = randvec(rng, K * N),
                   Bt = randvec(rng, N * K), At = randvec(rng, K * M);
        std::vector<double> c1(M * N), c2(M * N);
        s.gemm_nn(M, N, K, A.data(), Bn.data(), c1.data(), false);
        v.gemm_nn(M, N, K, A.data(), Bn.data(), c2.data(), false);
        check_close(c1, c2, 1e-13);
        s.gemm_nt(M, N, K, A.data(), Bt.data(), c1.data(), false);
        v.gemm_nt(M, N, K, A.data(), Bt.data(), c2.data(), false);
        check_close(c1, c2, 1e-13);
        s.gemm_tn(M, N, K, At.data(), Bn.data(), c1.data(), false);
        v.gemm_tn(M, N, K, At.data(), Bn.data(), c2.data(), false);
        check_close(c1, c2, 1e-13);
        // accumulate path
        s.gemm_nn(M, N, K, A.data(), Bn.data(), c1.data(), true);
        v.gemm_nn(M, N, K, A.data(), Bn.data(), c2.data(), true);
        check_close(c1, c2, 1e-13);
    }
}

TEST_CASE("avx2 adamw matches scalar") {
    if (!k::avx2_available()) return;
    Rng rng(3);
    const std::size_t n = 103;
    auto p1 = randvec(rng, n), g = randvec(rng, n), m1 = randvec(rng, n);
    auto v1 = randvec(rng, n);
    for (auto& x : v1) x = std::fabs(x);
    auto p2 = p1, m2 = m1, v2 = v1;
    k::scalar_ops().adamw(n, p1.data(), g.data(), m1.data(), v1.data(), 1e-3, 0.9,
                          0.999, 1e-8, 0.01, 0.1, 0.001);
    k::avx2_ops().adamw(n, p2.data(), g.data(), m2.data(), v2.data(), 1e-3, 0.9,
                        0.999, 1e-8, 0.01, 0.1, 0.001);
    check_close(p1, p2, 1e-14);
    check_close(m1, m2, 1e-14);
    check_close(v1, v2, 1e-14);
}
#endif

TEST_CASE("dispatch resolves to a usable op set") {
    const auto& ops = k::ops();
    const std::vector<double> x = {1, 2, 3};
    CHECK(ops.sum(3, x.data()) == doctest::Approx(6.0));
    CHECK((std::string(ops.name) == "scalar" || std::string(ops.name) == "avx2"));
}
