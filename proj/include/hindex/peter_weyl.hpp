#pragma once

#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "hindex/symbol_algebra.hpp"

namespace hindex {

using SpMat = Eigen::SparseMatrix<cplx>;

// Spin m/2 in the Condon–Shortley basis |j, j−a⟩, a = 0..m, and the images of
// the frame generators acting on the column index of D^{m/2}:
// T̂ = −2iJz, Â = −2iJy, B̂ = 2iJx, with X̂₁ = κÂ, X̂₂ = κB̂.
struct Su2Irrep {
    int m = 0;
    Eigen::MatrixXcd Jx, Jy, Jz;
    Eigen::MatrixXcd T, A, B;
};

Su2Irrep su2_irrep(int m);

// ⟨j μ; ½ σ | J, μ+σ⟩ in doubled units: m = 2j, mu2 = 2μ, sigma2 = ±1, J2 = m ± 1.
double clebsch_half(int m, int mu2, int sigma2, int J2);

// Orthonormal basis √(m+1) D^{m/2}_{ab} ⊗ e_s, m ≤ L, flattened as
// s·scalar_dim + offset(m) + a(m+1) + b.
struct PeterWeylBasis {
    int L = 0;
    int r = 1;
    int scalar_dim() const;
    int dim() const { return r * scalar_dim(); }
    static int offset(int m) { return m * (m + 1) * (2 * m + 1) / 6; }
    int index(int m, int a, int b, int s) const { return s * scalar_dim() + offset(m) + a * (m + 1) + b; }
    struct Label {
        int m, a, b, s;
    };
    Label label(int i) const;
};

// Multiplication by a scalar polynomial in (z₁, z₂, z̄₁, z̄₂), compressed to m ≤ L.
SpMat multiplication_operator(const Poly& p, int L);

struct PeterWeylOperator {
    PeterWeylBasis basis;
    double kappa = kFrameKappa;
    SpMat P;
    std::vector<int> spin;                     // m of each basis index
    std::vector<std::vector<int>> components;  // connected blocks of the sparsity pattern, sorted
};

// P_γ = Δ_H ⊗ I + iγ(T ⊗ I), with Δ_H = −(X₁² + X₂²) = 4κ²(J² − Jz²).
// Throws Unsupported when γ is not polynomial in (z, z̄).
PeterWeylOperator assemble_pgamma(const MatrixSymbolField& field, int L, double kappa = kFrameKappa);
// Δ_H + iT·γ*, assembled from the adjoint polynomial.
SpMat assemble_pgamma_adjoint(const MatrixSymbolField& field, int L, double kappa = kFrameKappa);
// Δ_H + (i/2)(γT + Tγ*).
SpMat assemble_hermitian_part(const MatrixSymbolField& field, int L, double kappa = kFrameKappa);

// Connected components of the symmetrized sparsity pattern, each sorted,
// ordered by smallest index.
std::vector<std::vector<int>> connected_blocks(const SpMat& a);

Eigen::MatrixXcd dense_block(const SpMat& a, const std::vector<int>& idx);

}  // namespace hindex
