#pragma once

#include <vector>

#include "hindex/symbol_algebra.hpp"

namespace hindex {

struct WindingResult {
    int beta = 0;
    cplx raw;         // integral before normalization
    cplx normalized;  // c · raw
    double residual = 0.0;  // |normalized − beta|
    int resolution = 0;
    double min_abs_det = 0.0;
};

// Normalizations of the odd Chern integrals, closed forms frozen in code.
// sign_convention relates the topological β to the analytic Toeplitz index
// and is stored per sphere dimension.
struct CalibrationConstants {
    cplx c1;  // multiplies ∮ tr(f⁻¹ df)
    cplx c3;  // multiplies ∫ Tr((f⁻¹df)³) on the θ∧dθ orientation
    int sign_s1 = 0;
    int sign_s3 = 0;
    int sign_convention(int n) const;
};

const CalibrationConstants& calibration();

// Recomputes the anchors β(z) on S¹ and β(su2) on S³ and throws
// InternalConsistency unless both are +1 within 1e−6.
void verify_calibration();

inline constexpr double kResidualTol = 0.05;
inline constexpr double kInvertibleTol = 1e-8;

WindingResult winding_s1(const Expr& f, int resolution);
WindingResult winding_s3(const Expr& f, const QuadratureRule& quad);

struct Contribution {
    int sign = +1;  // +1 for the E⁺ branch (γ − kI), −1 for E⁻ (γ + kI)
    int j = 0;
    long long multiplicity = 1;
    int beta = 0;
    double residual = 0.0;
    cplx raw;
};

struct TopIndexReport {
    long long index = 0;
    std::vector<Contribution> contributions;
    int N = 0, n = 1, r = 1;
};

TopIndexReport index_topological(const MatrixSymbolField& field, const FockModel& fock, const QuadratureRule& quad);
// n ≥ 2: β(γ − (n+2j)I) and β(γ + (n+2j)I) supplied by the caller, j = 0..N.
TopIndexReport index_topological(int n, int r, const std::vector<int>& beta_plus, const std::vector<int>& beta_minus);

// Σ_{k odd, |k| ≤ 2N+1} β(γ − kI), computed independently and checked
// against index_topological.
TopIndexReport index_s3_simple(const MatrixSymbolField& field, const FockModel& fock, const QuadratureRule& quad);

struct ToeplitzTopological {
    int index = 0;
    WindingResult winding;
    int sign_convention = 0;
};

// f on S¹ (n = 0, quad ignored, resolution from quad.resolution) or S³ (n = 1).
ToeplitzTopological toeplitz_topological_index(const Expr& f, int n, const QuadratureRule& quad);

// Odd k ordered ascending: −(n+2N), …, −n, n, …, n+2N.
std::vector<int> odd_k_range(int n, int N);
double twisted_index(const TopIndexReport& rep, int rankF, const std::vector<double>& pairing_terms);

}  // namespace hindex
