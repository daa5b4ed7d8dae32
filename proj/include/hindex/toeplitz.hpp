#pragma once

#include <optional>

#include "hindex/spectral.hpp"
#include "hindex/symbol.hpp"

namespace hindex {

// Block Fourier coefficients of an r×r symbol on the circle, k = −K..K.
struct FourierSeries {
    int r = 1;
    int K = 0;
    std::vector<Eigen::MatrixXcd> coeff;  // coeff[k + K]
    const Eigen::MatrixXcd& at(int k) const { return coeff[k + K]; }
    bool has(int k) const { return k >= -K && k <= K; }
};

struct ToeplitzS1Result {
    int index = 0;
    int D = 0;
    double trace_D = 0.0;    // parametrix trace on the D-corner
    double trace_2D = 0.0;   // and on the 2D-corner
    int degree_plus = 0;     // Laurent degrees of f
    int degree_minus = 0;
    int inverse_order = 0;   // Fourier truncation of f⁻¹
    double inverse_tail = 0.0;
    int samples = 0;
    SpectralReport svd;      // square sections D, D+2, D+4 with the interior filter
    std::optional<bool> svd_agrees;  // empty when the SVD census is unresolved
};

inline constexpr double kInverseTail = 1e-10;

// Throws NonInvertible, InvalidInput (D below 4·degree) or Inconclusive.
ToeplitzS1Result toeplitz_s1_index(const Expr& f, int D, const SpectralOptions& opt = {});

// ∫_{S³} |z₁|^{2a} |z₂|^{2b} = 2π² a! b! / (a+b+1)!
double hardy_s3_gram(int a, int b);

// T_f on span{z₁^a z₂^b : a+b ≤ D} ⊗ ℂ^r, orthonormalized with the exact Gram data.
Eigen::MatrixXcd toeplitz_s3_section(const MatPoly& f, int D);

struct ToeplitzS3Result {
    SpectralReport report;  // rows for D, D+2, D+4
    int index = 0;
};

// Throws Unsupported for non-polynomial f and Inconclusive when the census
// does not stabilize.
ToeplitzS3Result toeplitz_s3_index(const Expr& f, int D, const SpectralOptions& opt = {});

}  // namespace hindex
