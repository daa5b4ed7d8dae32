#include "hindex/peter_weyl.hpp"

#include <cmath>
#include <numeric>

#include "hindex/error.hpp"

namespace hindex {

namespace {

constexpr cplx I(0.0, 1.0);

}  // namespace

Su2Irrep su2_irrep(int m) {
    if (m < 0) throw Error(ErrorKind::InvalidInput, "spin index must be nonnegative");
    Su2Irrep s;
    s.m = m;
    const int d = m + 1;
    const double j = m / 2.0;
    Eigen::MatrixXcd jp = Eigen::MatrixXcd::Zero(d, d);
    s.Jz = Eigen::MatrixXcd::Zero(d, d);
    for (int a = 0; a < d; ++a) {
        const double mu = j - a;
        s.Jz(a, a) = mu;
        // J₊|j, μ⟩ = √(j(j+1) − μ(μ+1)) |j, μ+1⟩, and μ+1 sits at a−1
        if (a > 0) jp(a - 1, a) = std::sqrt(j * (j + 1) - mu * (mu + 1));
    }
    const Eigen::MatrixXcd jm = jp.adjoint();
    s.Jx = (jp + jm) / 2.0;
    s.Jy = (jp - jm) / (2.0 * I);
    s.T = -2.0 * I * s.Jz;
    s.A = -2.0 * I * s.Jy;
    s.B = 2.0 * I * s.Jx;
    return s;
}

double clebsch_half(int m, int mu2, int sigma2, int J2) {
    const int M2 = mu2 + sigma2;
    if (std::abs(mu2) > m || std::abs(M2) > J2 || (sigma2 != 1 && sigma2 != -1)) return 0.0;
    const double den = 2.0 * (m + 1);
    if (J2 == m + 1) return std::sqrt((sigma2 > 0 ? m + M2 + 1 : m - M2 + 1) / den);
    if (J2 == m - 1) return sigma2 > 0 ? -std::sqrt((m - M2 + 1) / den) : std::sqrt((m + M2 + 1) / den);
    return 0.0;
}

int PeterWeylBasis::scalar_dim() const { return offset(L + 1); }

PeterWeylBasis::Label PeterWeylBasis::label(int i) const {
    const int sd = scalar_dim();
    Label l{0, 0, 0, i / sd};
    int k = i % sd;
    while (offset(l.m + 1) <= k) ++l.m;
    k -= offset(l.m);
    l.a = k / (l.m + 1);
    l.b = k % (l.m + 1);
    return l;
}

namespace {

// Multiplication by D^{1/2}_{στ} on spins ≤ Lmax (outputs above Lmax dropped).
SpMat generator(int sigma2, int tau2, int Lmax) {
    PeterWeylBasis basis{Lmax, 1};
    std::vector<Eigen::Triplet<cplx>> t;
    for (int m = 0; m <= Lmax; ++m)
        for (int a = 0; a <= m; ++a)
            for (int b = 0; b <= m; ++b) {
                const int mu2 = m - 2 * a, nu2 = m - 2 * b;
                for (int M : {m + 1, m - 1}) {
                    if (M < 0 || M > Lmax) continue;
                    const double c = std::sqrt((m + 1.0) / (M + 1.0)) * clebsch_half(m, mu2, sigma2, M) *
                                     clebsch_half(m, nu2, tau2, M);
                    if (c == 0.0) continue;
                    const int a2 = (M - mu2 - sigma2) / 2, b2 = (M - nu2 - tau2) / 2;
                    t.emplace_back(basis.index(M, a2, b2, 0), basis.index(m, a, b, 0), c);
                }
            }
    SpMat g(basis.dim(), basis.dim());
    g.setFromTriplets(t.begin(), t.end());
    return g;
}

SpMat compress(const SpMat& a, int L) {
    const int d = PeterWeylBasis{L, 1}.scalar_dim();
    return a.topLeftCorner(d, d);
}

}  // namespace

SpMat multiplication_operator(const Poly& p, int L) {
    if (L < 0) throw Error(ErrorKind::InvalidInput, "spin cutoff must be nonnegative");
    int deg = 0;
    for (const auto& [mono, c] : p) deg = std::max(deg, mono[0] + mono[1] + mono[2] + mono[3]);
    const int Lmax = L + deg;
    const int d = PeterWeylBasis{Lmax, 1}.scalar_dim();
    // z₁ = D↑↑, z₂ = D↓↑, z̄₁ = D↓↓, z̄₂ = −D↑↓
    SpMat gens[4];
    if (deg > 0)
        gens[0] = generator(+1, +1, Lmax), gens[1] = generator(-1, +1, Lmax), gens[2] = generator(-1, -1, Lmax),
        gens[3] = -generator(+1, -1, Lmax);
    SpMat out(d, d);
    SpMat id(d, d);
    id.setIdentity();
    for (const auto& [mono, c] : p) {
        if (c == cplx(0.0)) continue;
        SpMat term = id;
        for (int v = 0; v < 4; ++v)
            for (int k = 0; k < mono[v]; ++k) term = SpMat(gens[v] * term);
        out += c * term;
    }
    out.prune(cplx(0.0));
    return compress(out, L);
}

namespace {

struct Diagonals {
    std::vector<double> delta;  // Δ̂ eigenvalue per scalar index
    std::vector<double> iT;     // iT̂ = 2ν per scalar index
};

Diagonals diagonals(int L, double kappa) {
    PeterWeylBasis basis{L, 1};
    Diagonals d;
    d.delta.resize(basis.dim());
    d.iT.resize(basis.dim());
    for (int m = 0; m <= L; ++m) {
        const double j = m / 2.0;
        for (int a = 0; a <= m; ++a)
            for (int b = 0; b <= m; ++b) {
                const double nu = j - b;
                const int i = basis.index(m, a, b, 0);
                d.delta[i] = 4.0 * kappa * kappa * (j * (j + 1) - nu * nu);
                d.iT[i] = 2.0 * nu;
            }
    }
    return d;
}

MatPoly polynomial_of(const MatrixSymbolField& field) {
    if (field.sphere.n != 1) throw Error(ErrorKind::Unsupported, "Peter-Weyl assembly exists only on S^3");
    try {
        return to_polynomial(field.expr);
    } catch (const Error& e) {
        throw Error(ErrorKind::Unsupported,
                    std::string("symbol is outside the su2-polynomial class: ") + e.what());
    }
}

// Block operator [M_{g_st}] on the r-fold basis.
SpMat multiplication_block(const MatPoly& g, int L) {
    const int sd = PeterWeylBasis{L, 1}.scalar_dim();
    std::vector<Eigen::Triplet<cplx>> t;
    for (int s = 0; s < g.rows; ++s)
        for (int u = 0; u < g.cols; ++u) {
            if (g.at(s, u).empty()) continue;
            const SpMat m = multiplication_operator(g.at(s, u), L);
            for (int k = 0; k < m.outerSize(); ++k)
                for (SpMat::InnerIterator it(m, k); it; ++it)
                    t.emplace_back(s * sd + it.row(), u * sd + it.col(), it.value());
        }
    SpMat out(g.rows * sd, g.cols * sd);
    out.setFromTriplets(t.begin(), t.end());
    return out;
}

SpMat diag_r(const std::vector<double>& v, int r) {
    const int sd = static_cast<int>(v.size());
    SpMat d(r * sd, r * sd);
    d.reserve(Eigen::VectorXi::Constant(r * sd, 1));
    for (int s = 0; s < r; ++s)
        for (int i = 0; i < sd; ++i) d.insert(s * sd + i, s * sd + i) = v[i];
    d.makeCompressed();
    return d;
}

}  // namespace

std::vector<std::vector<int>> connected_blocks(const SpMat& a) {
    const int n = static_cast<int>(a.rows());
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (int k = 0; k < a.outerSize(); ++k)
        for (SpMat::InnerIterator it(a, k); it; ++it) {
            const int x = find(static_cast<int>(it.row())), y = find(static_cast<int>(it.col()));
            if (x != y) parent[std::max(x, y)] = std::min(x, y);
        }
    std::vector<int> slot(n, -1);
    std::vector<std::vector<int>> blocks;
    for (int i = 0; i < n; ++i) {
        const int root = find(i);
        if (slot[root] < 0) {
            slot[root] = static_cast<int>(blocks.size());
            blocks.emplace_back();
        }
        blocks[slot[root]].push_back(i);
    }
    return blocks;
}

Eigen::MatrixXcd dense_block(const SpMat& a, const std::vector<int>& idx) {
    std::vector<int> pos(a.rows(), -1);
    for (std::size_t k = 0; k < idx.size(); ++k) pos[idx[k]] = static_cast<int>(k);
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(idx.size(), idx.size());
    for (std::size_t c = 0; c < idx.size(); ++c)
        for (SpMat::InnerIterator it(a, idx[c]); it; ++it)
            if (pos[it.row()] >= 0) out(pos[it.row()], c) = it.value();
    return out;
}

PeterWeylOperator assemble_pgamma(const MatrixSymbolField& field, int L, double kappa) {
    if (L < 0) throw Error(ErrorKind::InvalidInput, "spin cutoff must be nonnegative");
    const MatPoly g = polynomial_of(field);
    const Diagonals d = diagonals(L, kappa);
    PeterWeylOperator op;
    op.basis = {L, field.r};
    op.kappa = kappa;
    op.P = diag_r(d.delta, field.r) + multiplication_block(g, L) * diag_r(d.iT, field.r);
    op.P.prune(cplx(0.0));
    op.spin.resize(op.basis.dim());
    for (int i = 0; i < op.basis.dim(); ++i) op.spin[i] = op.basis.label(i).m;
    op.components = connected_blocks(op.P);
    return op;
}

SpMat assemble_pgamma_adjoint(const MatrixSymbolField& field, int L, double kappa) {
    const MatPoly g = polynomial_adjoint(polynomial_of(field));
    const Diagonals d = diagonals(L, kappa);
    // (iT)* = iT since iT̂ = 2ν is real diagonal.
    SpMat p = diag_r(d.delta, field.r) + diag_r(d.iT, field.r) * multiplication_block(g, L);
    p.prune(cplx(0.0));
    return p;
}

SpMat assemble_hermitian_part(const MatrixSymbolField& field, int L, double kappa) {
    const MatPoly g = polynomial_of(field);
    const MatPoly gs = polynomial_adjoint(g);
    const Diagonals d = diagonals(L, kappa);
    const SpMat it = diag_r(d.iT, field.r);
    SpMat h = diag_r(d.delta, field.r) +
              0.5 * (SpMat(multiplication_block(g, L) * it) + SpMat(it * multiplication_block(gs, L)));
    h.prune(cplx(0.0));
    return h;
}

}  // namespace hindex
