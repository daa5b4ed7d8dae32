#include "hindex/ktheory.hpp"

#include <cmath>
#include <mutex>

#include "hindex/error.hpp"
#include "hindex/parallel.hpp"

namespace hindex {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Sign of ∫ Tr((su2⁻¹ d su2)³) on the θ∧dθ orientation, read off once from
// the quadrature and frozen.
constexpr int kRawSu2Sign = +1;

const CalibrationConstants kCalibration{
    cplx(0.0, -1.0 / (2.0 * kPi)),          // 1/(2πi)
    cplx(kRawSu2Sign / (24.0 * kPi * kPi), 0.0),
    -1,  // T_z is the unilateral shift: index −1
    +1,  // T_su2 on the Hardy space of S³ has kernel ℂ(0,1): index +1
};

template <class Mat>
Mat load(const BatchValues& v, std::size_t k, int r) {
    Mat m(r, r);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) m(i, j) = v.at(i, j, k);
    return m;
}

WindingResult finish(cplx raw, cplx c, int resolution, double min_det) {
    WindingResult w;
    w.raw = raw;
    w.normalized = c * raw;
    w.beta = static_cast<int>(std::lround(w.normalized.real()));
    w.residual = std::abs(w.normalized - cplx(w.beta, 0.0));
    w.resolution = resolution;
    w.min_abs_det = min_det;
    if (w.residual >= kResidualTol)
        throw Error(ErrorKind::ResolutionInsufficient,
                    "winding integral residual " + std::to_string(w.residual) + " at resolution " +
                        std::to_string(resolution) + " (normalized value " + std::to_string(w.normalized.real()) +
                        ")");
    return w;
}

void require_square(const Expr& f) {
    if (f->rows != f->cols) throw Error(ErrorKind::InvalidInput, "winding number needs a square symbol");
}

[[noreturn]] void singular(double min_det) {
    throw Error(ErrorKind::NonInvertible,
                "symbol is not invertible on the sample set (min |det| = " + std::to_string(min_det) + ")");
}

// Per-node integrand values of 3·Tr(A_η [A_1, A_2]) for A_u = f⁻¹ ∂_u f.
template <class Mat>
void s3_integrand(const std::vector<BatchValues>& v, const QuadratureRule& q, std::size_t begin, std::size_t count,
                  int r, double* re, double* im, double& min_det) {
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t node = begin + k;
        const Mat f = load<Mat>(v[0], k, r);
        const double det = std::abs(f.determinant());
        min_det = std::min(min_det, det);
        if (det < kInvertibleTol) {
            re[k] = im[k] = 0.0;
            continue;
        }
        const Mat finv = f.inverse();
        const auto e = hopf_tangents(q.eta[node], q.xi1[node], q.xi2[node]);
        Mat a[3];
        for (int u = 0; u < 3; ++u) {
            Mat df = Mat::Zero(r, r);
            for (int i = 0; i < 4; ++i)
                if (e[u][i] != 0.0) df += e[u][i] * load<Mat>(v[1 + i], k, r);
            a[u] = finv * df;
        }
        const cplx t = 3.0 * (a[0] * (a[1] * a[2] - a[2] * a[1])).trace();
        re[k] = t.real();
        im[k] = t.imag();
    }
}

}  // namespace

int CalibrationConstants::sign_convention(int n) const {
    if (n == 0) return sign_s1;
    if (n == 1) return sign_s3;
    throw Error(ErrorKind::Unsupported, "no sign convention for n = " + std::to_string(n));
}

const CalibrationConstants& calibration() { return kCalibration; }

void verify_calibration() {
    static std::once_flag once;
    static std::string failure;
    std::call_once(once, [] {
        const double tol = 1e-6;
        const auto z = winding_s1(parse_symbol("z", {0, 1}), 64);
        const auto s = winding_s3(sym::su2(), quadrature_s3(32));
        if (std::abs(z.normalized - 1.0) > tol)
            failure = "beta(z) normalizes to " + std::to_string(z.normalized.real());
        else if (std::abs(s.normalized - 1.0) > tol)
            failure = "beta(su2) normalizes to " + std::to_string(s.normalized.real());
    });
    if (!failure.empty()) throw Error(ErrorKind::InternalConsistency, "calibration check failed: " + failure);
}

WindingResult winding_s1(const Expr& f, int resolution) {
    require_square(f);
    const QuadratureRule q = quadrature_s1(resolution);
    const int r = f->rows;
    const Evaluator ev({f, sym::derivative(f, 0), sym::derivative(f, 1)});
    const auto v = evaluate_on_rule(ev, q, 0, q.size());
    std::vector<double> re(q.size()), im(q.size());
    double min_det = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < q.size(); ++k) {
        const Eigen::MatrixXcd m = load<Eigen::MatrixXcd>(v[0], k, r);
        const cplx det = m.determinant();
        min_det = std::min(min_det, std::abs(det));
        if (std::abs(det) < kInvertibleTol) continue;
        // d/dξ along (−sin ξ, cos ξ)
        const Eigen::MatrixXcd df =
            -q.x[1][k] * load<Eigen::MatrixXcd>(v[1], k, r) + q.x[0][k] * load<Eigen::MatrixXcd>(v[2], k, r);
        const cplx t = m.partialPivLu().solve(df).trace();
        re[k] = t.real();
        im[k] = t.imag();
    }
    if (min_det < kInvertibleTol) singular(min_det);
    return finish(integrate(q, re, im), kCalibration.c1, resolution, min_det);
}

WindingResult winding_s3(const Expr& f, const QuadratureRule& quad) {
    require_square(f);
    if (quad.n != 1) throw Error(ErrorKind::InvalidInput, "winding_s3 needs an S^3 quadrature");
    const int r = f->rows;
    std::vector<Expr> roots{f};
    for (int i = 0; i < 4; ++i) roots.push_back(sym::derivative(f, i));
    const Evaluator ev(roots);
    std::vector<double> re(quad.size()), im(quad.size());
    const std::size_t blocks = block_count(quad);
    std::vector<double> dets(blocks, std::numeric_limits<double>::infinity());
    parallel_for(blocks, [&](std::size_t b) {
        const std::size_t begin = b * kNodeBlock, count = std::min(kNodeBlock, quad.size() - begin);
        const auto v = evaluate_on_rule(ev, quad, begin, count);
        if (r == 2)
            s3_integrand<Eigen::Matrix2cd>(v, quad, begin, count, r, re.data() + begin, im.data() + begin, dets[b]);
        else
            s3_integrand<Eigen::MatrixXcd>(v, quad, begin, count, r, re.data() + begin, im.data() + begin, dets[b]);
    });
    double min_det = std::numeric_limits<double>::infinity();
    for (double d : dets) min_det = std::min(min_det, d);
    if (min_det < kInvertibleTol) singular(min_det);
    const cplx raw = double(hopf_orientation()) * integrate(quad, re, im);
    return finish(raw, kCalibration.c3, quad.resolution, min_det);
}

namespace {

Expr shifted(const MatrixSymbolField& field, int k) {
    // γ − kI
    return sym::sub(field.expr, sym::constant(cplx(k, 0.0)));
}

void require_s3(const MatrixSymbolField& field) {
    if (field.sphere.n == 0) throw Error(ErrorKind::Unsupported, "P_gamma needs n >= 1");
    if (field.sphere.n != 1)
        throw Error(ErrorKind::Unsupported, "numeric windings exist only on S^3; supply beta values for n >= 2");
}

}  // namespace

TopIndexReport index_topological(const MatrixSymbolField& field, const FockModel& fock, const QuadratureRule& quad) {
    require_s3(field);
    const int n = field.sphere.n;
    TopIndexReport rep;
    rep.N = fock.N;
    rep.n = n;
    rep.r = field.r;
    const int minus_sign = (n + 1) % 2 == 0 ? +1 : -1;
    for (int j = 0; j <= fock.N; ++j) {
        const long long m = multiplicity(n, j);
        for (int branch : {+1, -1}) {
            const int k = n + 2 * j;
            const auto w = winding_s3(shifted(field, branch * k), quad);
            Contribution c;
            c.sign = branch;
            c.j = j;
            c.multiplicity = m;
            c.beta = w.beta;
            c.residual = w.residual;
            c.raw = w.raw;
            rep.contributions.push_back(c);
            rep.index += (branch > 0 ? 1 : minus_sign) * m * w.beta;
        }
    }
    return rep;
}

TopIndexReport index_topological(int n, int r, const std::vector<int>& beta_plus, const std::vector<int>& beta_minus) {
    if (n < 1) throw Error(ErrorKind::Unsupported, "P_gamma needs n >= 1");
    if (beta_plus.empty() || beta_plus.size() != beta_minus.size())
        throw Error(ErrorKind::InvalidInput, "beta lists must be nonempty and of equal length N+1");
    TopIndexReport rep;
    rep.n = n;
    rep.r = r;
    rep.N = static_cast<int>(beta_plus.size()) - 1;
    const int minus_sign = (n + 1) % 2 == 0 ? +1 : -1;
    for (int j = 0; j <= rep.N; ++j) {
        const long long m = multiplicity(n, j);
        rep.contributions.push_back({+1, j, m, beta_plus[j], 0.0, {}});
        rep.contributions.push_back({-1, j, m, beta_minus[j], 0.0, {}});
        rep.index += m * beta_plus[j] + minus_sign * m * beta_minus[j];
    }
    return rep;
}

std::vector<int> odd_k_range(int n, int N) {
    std::vector<int> ks;
    for (int j = N; j >= 0; --j) ks.push_back(-(n + 2 * j));
    for (int j = 0; j <= N; ++j) ks.push_back(n + 2 * j);
    return ks;
}

TopIndexReport index_s3_simple(const MatrixSymbolField& field, const FockModel& fock, const QuadratureRule& quad) {
    require_s3(field);
    TopIndexReport rep;
    rep.N = fock.N;
    rep.n = 1;
    rep.r = field.r;
    for (int k : odd_k_range(1, fock.N)) {
        const auto w = winding_s3(shifted(field, k), quad);
        Contribution c;
        c.sign = k > 0 ? +1 : -1;
        c.j = (std::abs(k) - 1) / 2;
        c.beta = w.beta;
        c.residual = w.residual;
        c.raw = w.raw;
        rep.contributions.push_back(c);
        rep.index += w.beta;
    }
    const auto full = index_topological(field, fock, quad);
    if (full.index != rep.index)
        throw Error(ErrorKind::InternalConsistency, "odd-k sum " + std::to_string(rep.index) +
                                                        " differs from the Fock-level sum " +
                                                        std::to_string(full.index));
    return rep;
}

ToeplitzTopological toeplitz_topological_index(const Expr& f, int n, const QuadratureRule& quad) {
    ToeplitzTopological t;
    t.sign_convention = kCalibration.sign_convention(n);
    t.winding = n == 0 ? winding_s1(f, quad.resolution) : winding_s3(f, quad);
    t.index = t.sign_convention * t.winding.beta;
    return t;
}

double twisted_index(const TopIndexReport& rep, int rankF, const std::vector<double>& pairing_terms) {
    if (rankF < 0) throw Error(ErrorKind::InvalidInput, "rank of F must be nonnegative");
    const std::size_t want = odd_k_range(rep.n, rep.N).size();
    if (pairing_terms.size() != want)
        throw Error(ErrorKind::InvalidInput, "expected " + std::to_string(want) + " pairing terms, got " +
                                                 std::to_string(pairing_terms.size()));
    double s = double(rankF) * double(rep.index);
    for (double p : pairing_terms) s += p;
    return s;
}

}  // namespace hindex
