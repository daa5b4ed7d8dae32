#include "hindex/toeplitz.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "hindex/error.hpp"
#include "hindex/ktheory.hpp"
#include "hindex/symbol_algebra.hpp"

namespace hindex {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Sampled {
    std::vector<Eigen::MatrixXcd> f, finv;
    double min_det = 0.0;
};

Sampled sample_circle(const Expr& f, int M) {
    const int r = f->rows;
    std::vector<double> x(M), y(M), z(M, 0.0);
    for (int l = 0; l < M; ++l) {
        x[l] = std::cos(2 * kPi * l / M);
        y[l] = std::sin(2 * kPi * l / M);
    }
    const double* pts[4] = {x.data(), y.data(), z.data(), z.data()};
    const auto v = Evaluator(f).eval(M, pts)[0];
    Sampled s;
    s.min_det = std::numeric_limits<double>::infinity();
    for (int l = 0; l < M; ++l) {
        Eigen::MatrixXcd m(r, r);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) m(i, j) = v.at(i, j, l);
        const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(m);
        s.min_det = std::min(s.min_det, std::abs(lu.determinant()));
        s.f.push_back(m);
        s.finv.push_back(lu.inverse());
    }
    return s;
}

// Direct DFT: c_k = (1/M) Σ_l v_l e^{−ikξ_l}, |k| ≤ K.
FourierSeries dft(const std::vector<Eigen::MatrixXcd>& v, int K) {
    const int M = static_cast<int>(v.size());
    FourierSeries s;
    s.r = static_cast<int>(v[0].rows());
    s.K = K;
    for (int k = -K; k <= K; ++k) {
        Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(s.r, s.r);
        for (int l = 0; l < M; ++l) {
            // reduce k·l mod M before the angle to keep it exact
            const long long t = ((static_cast<long long>(k) * l) % M + M) % M;
            c += v[l] * std::polar(1.0, -2 * kPi * double(t) / M);
        }
        s.coeff.push_back(c / double(M));
    }
    return s;
}

// Σ_{i<n} Σ_{k≥0} tr(f_{i−k} g_{k−i} − g_{i−k} f_{k−i})
double corner_trace(const FourierSeries& f, const FourierSeries& g, int n) {
    const int B = std::max(f.K, g.K);
    cplx s = 0.0;
    for (int i = 0; i < n; ++i)
        for (int k = std::max(0, i - B); k <= i + B; ++k) {
            const int d = i - k;
            if (f.has(d) && g.has(-d)) s += (f.at(d) * g.at(-d)).trace();
            if (g.has(d) && f.has(-d)) s -= (g.at(d) * f.at(-d)).trace();
        }
    return s.real();
}

Eigen::MatrixXcd s1_section(const FourierSeries& f, int D) {
    const int r = f.r;
    Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(D * r, D * r);
    for (int i = 0; i < D; ++i)
        for (int k = 0; k < D; ++k)
            if (f.has(i - k)) t.block(i * r, k * r, r, r) = f.at(i - k);
    return t;
}

}  // namespace

ToeplitzS1Result toeplitz_s1_index(const Expr& f, int D, const SpectralOptions& opt) {
    if (f->rows != f->cols) throw Error(ErrorKind::InvalidInput, "Toeplitz symbol must be square");
    ToeplitzS1Result res;
    const int r = f->rows;

    // Laurent degrees from a generous sample; coefficients past M/4 mean f is
    // not a Laurent polynomial of manageable degree.
    int M = 256;
    const Sampled s = sample_circle(f, M);
    if (s.min_det < kInvertibleTol)
        throw Error(ErrorKind::NonInvertible,
                    "symbol is not invertible on the circle (min |det| = " + std::to_string(s.min_det) + ")");
    const FourierSeries full = dft(s.f, M / 2 - 1);
    double scale = 0.0;
    for (const auto& c : full.coeff) scale = std::max(scale, c.norm());
    res.degree_plus = res.degree_minus = 0;
    for (int k = -full.K; k <= full.K; ++k)
        if (full.at(k).norm() > 1e-12 * scale) {
            res.degree_plus = std::max(res.degree_plus, k);
            res.degree_minus = std::max(res.degree_minus, -k);
        }
    if (std::max(res.degree_plus, res.degree_minus) > M / 4)
        throw Error(ErrorKind::Unsupported, "symbol is not a Laurent polynomial of degree <= 64");
    const int deg = std::max(res.degree_plus, res.degree_minus);
    if (D < 4 * std::max(deg, 1))
        throw Error(ErrorKind::InvalidInput, "section size D = " + std::to_string(D) +
                                                 " is below 4 x Laurent degree " + std::to_string(deg));
    res.D = D;
    const FourierSeries fs = dft(s.f, deg);

    // Fourier truncation of f⁻¹ with tail below kInverseTail; refine the
    // sampling until the computed tail is trustworthy.
    FourierSeries gs;
    for (M = 512; M <= 1 << 14; M *= 2) {
        const Sampled t = sample_circle(f, M);
        const FourierSeries g = dft(t.finv, M / 2 - 1);
        std::vector<double> tail(g.K + 2, 0.0);  // tail[k] = Σ_{|j|≥k} ‖g_j‖
        for (int k = g.K; k >= 0; --k)
            tail[k] = tail[k + 1] + g.at(k).norm() + (k > 0 ? g.at(-k).norm() : 0.0);
        int K = -1;
        for (int k = 0; k <= g.K; ++k)
            if (tail[k + 1] < kInverseTail) {
                K = k;
                break;
            }
        if (K >= 0 && K < M / 8) {
            res.inverse_order = K;
            res.inverse_tail = tail[K + 1];
            res.samples = M;
            gs.r = r;
            gs.K = K;
            gs.coeff.assign(g.coeff.begin() + (g.K - K), g.coeff.begin() + (g.K + K + 1));
            break;
        }
    }
    if (gs.coeff.empty())
        throw Error(ErrorKind::Inconclusive, "Fourier series of the inverse symbol does not decay below 1e-10");

    res.trace_D = corner_trace(fs, gs, D);
    res.trace_2D = corner_trace(fs, gs, 2 * D);
    const long idx = std::lround(res.trace_2D);
    if (std::abs(res.trace_D - res.trace_2D) > 1e-6 || std::abs(res.trace_2D - double(idx)) > 1e-6) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "parametrix traces do not stabilize: %.9f on D = %d, %.9f on 2D", res.trace_D,
                      D, res.trace_2D);
        throw Error(ErrorKind::Inconclusive, buf);
    }
    res.index = static_cast<int>(idx);

    // Square sections with the interior filter; the band next to the
    // truncation edge is as wide as the symbol's reach.
    const int band = std::max(2, res.degree_plus + res.degree_minus);
    for (int d : {D, D + 2, D + 4}) {
        std::vector<int> shell(d * r);
        for (int i = 0; i < d * r; ++i) shell[i] = i / r;
        const NullityCount c = count_nullities(s1_section(fs, d), shell, d - band, opt);
        SectionRow row;
        row.cutoff = d;
        row.nullity = c.nullity;
        row.nullity_adj = c.nullity_adj;
        row.index = c.nullity - c.nullity_adj;
        row.min_singular_gap = merge_counts({c}, opt).gap;
        row.max_kernel_sv = c.max_kernel_sv;
        row.min_nonkernel_sv = c.min_nonkernel_sv;
        row.unresolved = c.unresolved;
        row.min_unresolved_sv = c.min_unresolved_sv;
        res.svd.rows.push_back(row);
    }
    judge_stability(res.svd, opt, false);
    if (res.svd.stable) {
        res.svd_agrees = *res.svd.index == res.index;
        if (!*res.svd_agrees)
            throw Error(ErrorKind::Inconclusive, "parametrix trace gives " + std::to_string(res.index) +
                                                     " but the SVD census gives " + std::to_string(*res.svd.index));
    }
    return res;
}

double hardy_s3_gram(int a, int b) {
    if (a < 0 || b < 0) throw Error(ErrorKind::InvalidInput, "Gram exponents must be nonnegative");
    return 2.0 * kPi * kPi * std::exp(std::lgamma(a + 1.0) + std::lgamma(b + 1.0) - std::lgamma(a + b + 2.0));
}

namespace {

double log_gram(int a, int b) {
    return std::log(2.0 * kPi * kPi) + std::lgamma(a + 1.0) + std::lgamma(b + 1.0) - std::lgamma(a + b + 2.0);
}

// Holomorphic monomials ordered by degree, then by the z₁ exponent.
int hardy_dim(int D) { return (D + 1) * (D + 2) / 2; }
int hardy_index(int a, int b) { return (a + b) * (a + b + 1) / 2 + a; }

}  // namespace

Eigen::MatrixXcd toeplitz_s3_section(const MatPoly& f, int D) {
    const int r = f.rows;
    const int n = hardy_dim(D);
    Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(n * r, n * r);
    for (int s = 0; s < r; ++s)
        for (int u = 0; u < r; ++u)
            for (const auto& [mono, c] : f.at(s, u))
                for (int deg = 0; deg <= D; ++deg)
                    for (int a = 0; a <= deg; ++a) {
                        const int b = deg - a;
                        // z^α · z^p z̄^q pairs with z^β, β = α + p − q
                        const int a2 = a + mono[0] - mono[2], b2 = b + mono[1] - mono[3];
                        if (a2 < 0 || b2 < 0 || a2 + b2 > D) continue;
                        const double lv = log_gram(a + mono[0], b + mono[1]) -
                                          0.5 * (log_gram(a, b) + log_gram(a2, b2));
                        t(s * n + hardy_index(a2, b2), u * n + hardy_index(a, b)) += c * std::exp(lv);
                    }
    return t;
}

ToeplitzS3Result toeplitz_s3_index(const Expr& f, int D, const SpectralOptions& opt) {
    if (f->rows != f->cols) throw Error(ErrorKind::InvalidInput, "Toeplitz symbol must be square");
    if (D < opt.top_shells) throw Error(ErrorKind::InvalidInput, "Hardy cutoff D is too small");
    MatPoly p;
    try {
        p = to_polynomial(f);
    } catch (const Error& e) {
        throw Error(ErrorKind::Unsupported, std::string("Toeplitz symbol on S^3 must be polynomial: ") + e.what());
    }
    // Fredholm only for symbols invertible on the whole sphere.
    const InvertibilityReport inv = check_invertible(MatrixSymbolField::from_expr(f, 1, p.rows), quadrature_s3(32));
    if (!inv.certified) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "cannot certify invertibility on S^3: min singular value %.3g, slack %.3g",
                      inv.min_singular, inv.slack);
        throw Error(ErrorKind::NonInvertible, buf);
    }
    ToeplitzS3Result res;
    for (int d : {D, D + 2, D + 4}) {
        const int n = hardy_dim(d);
        std::vector<int> shell(n * p.rows);
        for (int s = 0; s < p.rows; ++s)
            for (int deg = 0; deg <= d; ++deg)
                for (int a = 0; a <= deg; ++a) shell[s * n + hardy_index(a, deg - a)] = deg;
        const NullityCount c = count_nullities(toeplitz_s3_section(p, d), shell, d - opt.top_shells + 1, opt);
        SectionRow row;
        row.cutoff = d;
        row.nullity = c.nullity;
        row.nullity_adj = c.nullity_adj;
        row.index = c.nullity - c.nullity_adj;
        row.min_singular_gap = merge_counts({c}, opt).gap;
        row.max_kernel_sv = c.max_kernel_sv;
        row.min_nonkernel_sv = c.min_nonkernel_sv;
        row.unresolved = c.unresolved;
        row.min_unresolved_sv = c.min_unresolved_sv;
        res.report.rows.push_back(row);
    }
    judge_stability(res.report, opt, false);
    if (!res.report.stable) throw Error(ErrorKind::Inconclusive, "Hardy finite sections: " + res.report.reason);
    res.index = *res.report.index;
    return res;
}

}  // namespace hindex
