#include "hindex/kernels.hpp"

#if defined(__x86_64__) && defined(HINDEX_HAVE_AVX2)
#include <immintrin.h>

namespace hindex::kernels {

namespace {

// Separate mul/add/sub only: no FMA, so rounding matches the scalar reference.

void add_avx2(std::size_t n, const double* ar, const double* ai, const double* br, const double* bi, double* outr,
              double* outi) {
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        _mm256_storeu_pd(outr + k, _mm256_add_pd(_mm256_loadu_pd(ar + k), _mm256_loadu_pd(br + k)));
        _mm256_storeu_pd(outi + k, _mm256_add_pd(_mm256_loadu_pd(ai + k), _mm256_loadu_pd(bi + k)));
    }
    for (; k < n; ++k) {
        outr[k] = ar[k] + br[k];
        outi[k] = ai[k] + bi[k];
    }
}

void sub_avx2(std::size_t n, const double* ar, const double* ai, const double* br, const double* bi, double* outr,
              double* outi) {
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        _mm256_storeu_pd(outr + k, _mm256_sub_pd(_mm256_loadu_pd(ar + k), _mm256_loadu_pd(br + k)));
        _mm256_storeu_pd(outi + k, _mm256_sub_pd(_mm256_loadu_pd(ai + k), _mm256_loadu_pd(bi + k)));
    }
    for (; k < n; ++k) {
        outr[k] = ar[k] - br[k];
        outi[k] = ai[k] - bi[k];
    }
}

inline void cmul4(__m256d xr, __m256d xi, __m256d yr, __m256d yi, __m256d& re, __m256d& im) {
    re = _mm256_sub_pd(_mm256_mul_pd(xr, yr), _mm256_mul_pd(xi, yi));
    im = _mm256_add_pd(_mm256_mul_pd(xr, yi), _mm256_mul_pd(xi, yr));
}

void mul_avx2(std::size_t n, const double* ar, const double* ai, const double* br, const double* bi, double* outr,
              double* outi) {
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        __m256d re, im;
        cmul4(_mm256_loadu_pd(ar + k), _mm256_loadu_pd(ai + k), _mm256_loadu_pd(br + k), _mm256_loadu_pd(bi + k),
              re, im);
        _mm256_storeu_pd(outr + k, re);
        _mm256_storeu_pd(outi + k, im);
    }
    for (; k < n; ++k) {
        const double re = ar[k] * br[k] - ai[k] * bi[k];
        const double im = ar[k] * bi[k] + ai[k] * br[k];
        outr[k] = re;
        outi[k] = im;
    }
}

void mul_acc_avx2(std::size_t n, const double* ar, const double* ai, const double* br, const double* bi,
                  double* outr, double* outi) {
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        __m256d re, im;
        cmul4(_mm256_loadu_pd(ar + k), _mm256_loadu_pd(ai + k), _mm256_loadu_pd(br + k), _mm256_loadu_pd(bi + k),
              re, im);
        _mm256_storeu_pd(outr + k, _mm256_add_pd(_mm256_loadu_pd(outr + k), re));
        _mm256_storeu_pd(outi + k, _mm256_add_pd(_mm256_loadu_pd(outi + k), im));
    }
    for (; k < n; ++k) {
        const double re = ar[k] * br[k] - ai[k] * bi[k];
        const double im = ar[k] * bi[k] + ai[k] * br[k];
        outr[k] = outr[k] + re;
        outi[k] = outi[k] + im;
    }
}

void div_avx2(std::size_t n, const double* ar, const double* ai, const double* br, const double* bi, double* outr,
              double* outi) {
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d xr = _mm256_loadu_pd(ar + k), xi = _mm256_loadu_pd(ai + k);
        const __m256d yr = _mm256_loadu_pd(br + k), yi = _mm256_loadu_pd(bi + k);
        const __m256d d = _mm256_add_pd(_mm256_mul_pd(yr, yr), _mm256_mul_pd(yi, yi));
        const __m256d re = _mm256_add_pd(_mm256_mul_pd(xr, yr), _mm256_mul_pd(xi, yi));
        const __m256d im = _mm256_sub_pd(_mm256_mul_pd(xi, yr), _mm256_mul_pd(xr, yi));
        _mm256_storeu_pd(outr + k, _mm256_div_pd(re, d));
        _mm256_storeu_pd(outi + k, _mm256_div_pd(im, d));
    }
    for (; k < n; ++k) {
        const double d = br[k] * br[k] + bi[k] * bi[k];
        const double re = (ar[k] * br[k] + ai[k] * bi[k]) / d;
        const double im = (ai[k] * br[k] - ar[k] * bi[k]) / d;
        outr[k] = re;
        outi[k] = im;
    }
}

void scale_avx2(std::size_t n, double sr, double si, const double* ar, const double* ai, double* outr,
                double* outi) {
    const __m256d vr = _mm256_set1_pd(sr), vi = _mm256_set1_pd(si);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d xr = _mm256_loadu_pd(ar + k), xi = _mm256_loadu_pd(ai + k);
        _mm256_storeu_pd(outr + k, _mm256_sub_pd(_mm256_mul_pd(vr, xr), _mm256_mul_pd(vi, xi)));
        _mm256_storeu_pd(outi + k, _mm256_add_pd(_mm256_mul_pd(vr, xi), _mm256_mul_pd(vi, xr)));
    }
    for (; k < n; ++k) {
        const double re = sr * ar[k] - si * ai[k];
        const double im = sr * ai[k] + si * ar[k];
        outr[k] = re;
        outi[k] = im;
    }
}

void conj_avx2(std::size_t n, const double* ar, const double* ai, double* outr, double* outi) {
    const __m256d sign = _mm256_set1_pd(-0.0);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        _mm256_storeu_pd(outr + k, _mm256_loadu_pd(ar + k));
        _mm256_storeu_pd(outi + k, _mm256_xor_pd(_mm256_loadu_pd(ai + k), sign));
    }
    for (; k < n; ++k) {
        outr[k] = ar[k];
        outi[k] = -ai[k];
    }
}

cplx leaf_sum_avx2(std::size_t n, const double* w, const double* ar, const double* ai) {
    __m256d accr = _mm256_setzero_pd(), acci = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d wv = _mm256_loadu_pd(w + k);
        accr = _mm256_add_pd(accr, _mm256_mul_pd(wv, _mm256_loadu_pd(ar + k)));
        acci = _mm256_add_pd(acci, _mm256_mul_pd(wv, _mm256_loadu_pd(ai + k)));
    }
    alignas(32) double lr[4];
    alignas(32) double li[4];
    _mm256_store_pd(lr, accr);
    _mm256_store_pd(li, acci);
    for (; k < n; ++k) {
        lr[k & 3] += w[k] * ar[k];
        li[k & 3] += w[k] * ai[k];
    }
    return {(lr[0] + lr[1]) + (lr[2] + lr[3]), (li[0] + li[1]) + (li[2] + li[3])};
}

const Table kAvx2{"avx2", add_avx2, sub_avx2, mul_avx2, mul_acc_avx2, div_avx2, scale_avx2, conj_avx2, leaf_sum_avx2};

}  // namespace

const Table* avx2_table() {
    static const bool ok = __builtin_cpu_supports("avx2");
    return ok ? &kAvx2 : nullptr;
}

}  // namespace hindex::kernels

#else

namespace hindex::kernels {
const Table* avx2_table() { return nullptr; }
}  // namespace hindex::kernels

#endif
