#include "hindex/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace hindex::kernels {

namespace {

void add_ref(std::size_t n, const double* ar, const double* ai, const double* br, const double* bi, double* outr,
             double* outi) {
    for (std::size_t k = 0; k < n; ++k) {
        outr[k] = ar[k] + br[k];
        outi[k] = ai[k] + bi[k];
    }
}

void sub_ref(std::size_t n, const double* ar, const double* ai, const double* br, const double* bi, double* outr,
             double* outi) {
    for (std::size_t k = 0; k < n; ++k) {
        outr[k] = ar[k] - br[k];
        outi[k] = ai[k] - bi[k];
    }
}

void mul_ref(std::size_t n, const double* ar, const double* ai, const double* br, const double* bi, double* outr,
             double* outi) {
    for (std::size_t k = 0; k < n; ++k) {
        const double re = ar[k] * br[k] - ai[k] * bi[k];
        const double im = ar[k] * bi[k] + ai[k] * br[k];
        outr[k] = re;
        outi[k] = im;
    }
}

void mul_acc_ref(std::size_t n, const double* ar, const double* ai, const double* br, const double* bi,
                 double* outr, double* outi) {
    for (std::size_t k = 0; k < n; ++k) {
        const double re = ar[k] * br[k] - ai[k] * bi[k];
        const double im = ar[k] * bi[k] + ai[k] * br[k];
        outr[k] = outr[k] + re;
        outi[k] = outi[k] + im;
    }
}

void div_ref(std::size_t n, const double* ar, const double* ai, const double* br, const double* bi, double* outr,
             double* outi) {
    for (std::size_t k = 0; k < n; ++k) {
        const double d = br[k] * br[k] + bi[k] * bi[k];
        const double re = (ar[k] * br[k] + ai[k] * bi[k]) / d;
        const double im = (ai[k] * br[k] - ar[k] * bi[k]) / d;
        outr[k] = re;
        outi[k] = im;
    }
}

void scale_ref(std::size_t n, double sr, double si, const double* ar, const double* ai, double* outr,
               double* outi) {
    for (std::size_t k = 0; k < n; ++k) {
        const double re = sr * ar[k] - si * ai[k];
        const double im = sr * ai[k] + si * ar[k];
        outr[k] = re;
        outi[k] = im;
    }
}

void conj_ref(std::size_t n, const double* ar, const double* ai, double* outr, double* outi) {
    for (std::size_t k = 0; k < n; ++k) {
        outr[k] = ar[k];
        outi[k] = -ai[k];
    }
}

cplx leaf_sum_ref(std::size_t n, const double* w, const double* ar, const double* ai) {
    double lr[4] = {0, 0, 0, 0};
    double li[4] = {0, 0, 0, 0};
    for (std::size_t k = 0; k < n; ++k) {
        lr[k & 3] += w[k] * ar[k];
        li[k & 3] += w[k] * ai[k];
    }
    return {(lr[0] + lr[1]) + (lr[2] + lr[3]), (li[0] + li[1]) + (li[2] + li[3])};
}

const Table kScalar{"scalar", add_ref, sub_ref, mul_ref, mul_acc_ref, div_ref, scale_ref, conj_ref, leaf_sum_ref};

const Table& pick() {
    const char* force = std::getenv("HINDEX_SIMD");
    if (force != nullptr && std::strcmp(force, "scalar") == 0) return kScalar;
    if (const Table* t = avx2_table()) return *t;
    return kScalar;
}

cplx tree_sum(const Table& t, std::size_t n, const double* w, const double* ar, const double* ai) {
    if (n <= kLeaf) return t.leaf_sum(n, w, ar, ai);
    // Split on a leaf boundary so the tree depends only on n.
    const std::size_t leaves = (n + kLeaf - 1) / kLeaf;
    const std::size_t half = (leaves / 2) * kLeaf;
    const cplx lo = tree_sum(t, half, w, ar, ai);
    const cplx hi = tree_sum(t, n - half, w + half, ar + half, ai + half);
    return {lo.real() + hi.real(), lo.imag() + hi.imag()};
}

}  // namespace

const Table& scalar_table() { return kScalar; }

const Table& active() {
    static const Table& t = pick();
    return t;
}

cplx weighted_sum(const Table& t, std::size_t n, const double* w, const double* ar, const double* ai) {
    if (n == 0) return {0.0, 0.0};
    return tree_sum(t, n, w, ar, ai);
}

}  // namespace hindex::kernels
