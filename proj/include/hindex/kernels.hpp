#pragma once

#include <complex>
#include <cstddef>

// Complex array kernels on split (re, im) storage. Every routine has a scalar
// reference and an AVX2 variant; both perform the same IEEE operations in the
// same order, so their outputs are bitwise identical. The active table is
// picked once at first use from cpuid, or forced with HINDEX_SIMD=scalar.
namespace hindex::kernels {

using cplx = std::complex<double>;

struct Table {
    const char* name;
    // out = a + b, a - b, a * b
    void (*add)(std::size_t n, const double* ar, const double* ai, const double* br, const double* bi,
                double* outr, double* outi);
    void (*sub)(std::size_t n, const double* ar, const double* ai, const double* br, const double* bi,
                double* outr, double* outi);
    void (*mul)(std::size_t n, const double* ar, const double* ai, const double* br, const double* bi,
                double* outr, double* outi);
    // out += a * b
    void (*mul_acc)(std::size_t n, const double* ar, const double* ai, const double* br, const double* bi,
                    double* outr, double* outi);
    // out = a / b
    void (*div)(std::size_t n, const double* ar, const double* ai, const double* br, const double* bi,
                double* outr, double* outi);
    // out = s * a
    void (*scale)(std::size_t n, double sr, double si, const double* ar, const double* ai, double* outr,
                  double* outi);
    // out = conj(a)
    void (*conj)(std::size_t n, const double* ar, const double* ai, double* outr, double* outi);
    // Weighted sum of one leaf block (n <= kLeaf) in four interleaved lanes.
    cplx (*leaf_sum)(std::size_t n, const double* w, const double* ar, const double* ai);
};

constexpr std::size_t kLeaf = 256;

const Table& scalar_table();
// nullptr when the binary or the CPU lacks AVX2.
const Table* avx2_table();
const Table& active();

// Pairwise weighted sum over leaf blocks; the tree shape depends only on n.
cplx weighted_sum(const Table& t, std::size_t n, const double* w, const double* ar, const double* ai);
inline cplx weighted_sum(std::size_t n, const double* w, const double* ar, const double* ai) {
    return weighted_sum(active(), n, w, ar, ai);
}

}  // namespace hindex::kernels
