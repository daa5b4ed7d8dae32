#include <cstring>
#include <random>
#include <vector>

#include "doctest.h"
#include "hindex/kernels.hpp"

using namespace hindex;

namespace {

struct Arrays {
    std::vector<double> ar, ai, br, bi, w;
};

Arrays random_arrays(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    Arrays a;
    for (auto* v : {&a.ar, &a.ai, &a.br, &a.bi, &a.w}) {
        v->resize(n);
        for (auto& x : *v) x = u(rng);
    }
    for (auto& x : a.br) x += (x >= 0 ? 0.5 : -0.5);  // keep divisors away from 0
    return a;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("scalar and avx2 kernels agree bitwise") {
    const kernels::Table* simd = kernels::avx2_table();
    if (simd == nullptr) {
        MESSAGE("AVX2 unavailable on this machine; only the scalar table is exercised");
        return;
    }
    const kernels::Table& ref = kernels::scalar_table();
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 64u, 255u, 256u, 257u, 1001u}) {
        const Arrays a = random_arrays(n, 17 + n);
        using Bin = void (*)(std::size_t, const double*, const double*, const double*, const double*, double*,
                             double*);
        for (auto pick : {+[](const kernels::Table& t) { return t.add; }, +[](const kernels::Table& t) { return t.sub; },
                          +[](const kernels::Table& t) { return t.mul; }, +[](const kernels::Table& t) { return t.div; }}) {
            Bin f = pick(ref), g = pick(*simd);
            std::vector<double> r1(n), i1(n), r2(n), i2(n);
            f(n, a.ar.data(), a.ai.data(), a.br.data(), a.bi.data(), r1.data(), i1.data());
            g(n, a.ar.data(), a.ai.data(), a.br.data(), a.bi.data(), r2.data(), i2.data());
            CHECK(same_bits(r1, r2));
            CHECK(same_bits(i1, i2));
        }
        std::vector<double> r1 = a.w, i1 = a.w, r2 = a.w, i2 = a.w;
        ref.mul_acc(n, a.ar.data(), a.ai.data(), a.br.data(), a.bi.data(), r1.data(), i1.data());
        simd->mul_acc(n, a.ar.data(), a.ai.data(), a.br.data(), a.bi.data(), r2.data(), i2.data());
        CHECK(same_bits(r1, r2));
        CHECK(same_bits(i1, i2));
        ref.scale(n, 0.3, -1.7, a.ar.data(), a.ai.data(), r1.data(), i1.data());
        simd->scale(n, 0.3, -1.7, a.ar.data(), a.ai.data(), r2.data(), i2.data());
        CHECK(same_bits(r1, r2));
        CHECK(same_bits(i1, i2));
        ref.conj(n, a.ar.data(), a.ai.data(), r1.data(), i1.data());
        simd->conj(n, a.ar.data(), a.ai.data(), r2.data(), i2.data());
        CHECK(same_bits(r1, r2));
        CHECK(same_bits(i1, i2));
        const auto s1 = kernels::weighted_sum(ref, n, a.w.data(), a.ar.data(), a.ai.data());
        const auto s2 = kernels::weighted_sum(*simd, n, a.w.data(), a.ar.data(), a.ai.data());
        CHECK(std::memcmp(&s1, &s2, sizeof s1) == 0);
    }
}

TEST_CASE("weighted pairwise sum matches an extended-precision sum") {
    const std::size_t n = 100000;
    const Arrays a = random_arrays(n, 5);
    long double re = 0, im = 0;
    for (std::size_t k = 0; k < n; ++k) {
        re += static_cast<long double>(a.w[k]) * a.ar[k];
        im += static_cast<long double>(a.w[k]) * a.ai[k];
    }
    const auto s = kernels::weighted_sum(n, a.w.data(), a.ar.data(), a.ai.data());
    CHECK(std::abs(s.real() - static_cast<double>(re)) < 1e-9);
    CHECK(std::abs(s.imag() - static_cast<double>(im)) < 1e-9);
    CHECK(kernels::weighted_sum(0, nullptr, nullptr, nullptr) == kernels::cplx(0.0));
}

TEST_CASE("complex kernels compute the textbook formulas") {
    const double ar[] = {1.0}, ai[] = {2.0}, br[] = {3.0}, bi[] = {-1.0};
    double r[1], i[1];
    kernels::active().mul(1, ar, ai, br, bi, r, i);
    CHECK(r[0] == 5.0);
    CHECK(i[0] == 5.0);
    kernels::active().div(1, r, i, br, bi, r, i);
    CHECK(r[0] == doctest::Approx(1.0));
    CHECK(i[0] == doctest::Approx(2.0));
}
