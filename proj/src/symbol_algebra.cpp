#include "hindex/symbol_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hindex/error.hpp"
#include "hindex/parallel.hpp"

namespace hindex {

MatrixSymbolField MatrixSymbolField::from_expr(const Expr& e, int n, int r) {
    if (r < 1) throw Error(ErrorKind::InvalidInput, "matrix size r must be positive");
    MatrixSymbolField f;
    f.sphere = make_sphere(n);
    f.r = r;
    f.expr = (sym::is_scalar(e) && r > 1) ? sym::mul(e, sym::identity(r)) : e;
    if (f.expr->rows != r || f.expr->cols != r)
        throw Error(ErrorKind::InvalidInput, "symbol has shape " + std::to_string(e->rows) + "x" +
                                                 std::to_string(e->cols) + " but r = " + std::to_string(r));
    f.source = sym::to_string(f.expr);
    return f;
}

MatrixSymbolField MatrixSymbolField::parse(const std::string& text, int n, int r) {
    MatrixSymbolField f = from_expr(parse_symbol(text, {n, r}), n, r);
    f.source = text;
    return f;
}

Eigen::MatrixXcd eval_gamma(const MatrixSymbolField& field, const SpherePoint& x) {
    return Evaluator(field.expr).eval_point(x.coords)[0];
}

Eigen::MatrixXcd fock_action(const MatrixSymbolField& field, FockSign sign, int j, const SpherePoint& x) {
    if (j < 0) throw Error(ErrorKind::InvalidInput, "Fock level must be nonnegative");
    const Eigen::MatrixXcd g = eval_gamma(field, x);
    const double level = 2.0 * j + field.sphere.n;
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(field.r, field.r) * level;
    return sign == FockSign::Plus ? Eigen::MatrixXcd(id - g) : Eigen::MatrixXcd(id + g);
}

long long multiplicity(int n, int j) {
    if (n < 1 || j < 0) throw Error(ErrorKind::InvalidInput, "multiplicity needs n >= 1 and j >= 0");
    // C(n+j−1, j), exact in integers for the sizes used here.
    long long c = 1;
    for (int k = 1; k <= j; ++k) c = c * (n - 1 + k) / k;
    return c;
}

std::vector<BatchValues> evaluate_on_rule(const Evaluator& ev, const QuadratureRule& rule, std::size_t begin,
                                          std::size_t count) {
    const double* ptr[4] = {rule.x[0].data() + begin, rule.x[1].data() + begin, rule.x[2].data() + begin,
                            rule.x[3].data() + begin};
    return ev.eval(count, ptr);
}

namespace {

Eigen::MatrixXcd matrix_at(const BatchValues& v, std::size_t k) {
    Eigen::MatrixXcd m(v.rows, v.cols);
    for (int i = 0; i < v.rows; ++i)
        for (int j = 0; j < v.cols; ++j) m(i, j) = v.at(i, j, k);
    return m;
}

// Extreme singular values; closed form for 2×2 via the eigenvalues of M*M.
std::pair<double, double> singular_range(const Eigen::MatrixXcd& m) {
    if (m.size() == 1) return {std::abs(m(0, 0)), std::abs(m(0, 0))};
    if (m.rows() == 2 && m.cols() == 2) {
        const double a = std::norm(m(0, 0)) + std::norm(m(1, 0));
        const double c = std::norm(m(0, 1)) + std::norm(m(1, 1));
        const cplx b = std::conj(m(0, 0)) * m(0, 1) + std::conj(m(1, 0)) * m(1, 1);
        const double smax = std::sqrt((a + c) / 2.0 + std::hypot((a - c) / 2.0, std::abs(b)));
        // σ_min σ_max = |det| avoids cancellation
        const double d = std::abs(m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0));
        return {smax > 0.0 ? d / smax : 0.0, smax};
    }
    const auto sv = Eigen::JacobiSVD<Eigen::MatrixXcd>(m).singularValues();
    return {sv(sv.size() - 1), sv(0)};
}

double spectral_norm(const Eigen::MatrixXcd& m) { return singular_range(m).second; }
double min_singular(const Eigen::MatrixXcd& m) { return singular_range(m).first; }

void require_numeric(const MatrixSymbolField& field, const QuadratureRule& grid) {
    if (field.sphere.n != 1)
        throw Error(ErrorKind::Unsupported, "Heisenberg ellipticity is scanned numerically only on S^3");
    if (grid.size() == 0) throw Error(ErrorKind::InvalidInput, "ellipticity scan needs a nonempty grid");
    if (grid.n != field.sphere.n) throw Error(ErrorKind::InvalidInput, "grid belongs to a different sphere");
}

// Per-block maxima of ‖γ‖ and of the gradient bound sqrt(Σᵢ‖∂ᵢγ‖²).
struct NormScan {
    double sup = 0.0;
    double grad = 0.0;
};

NormScan scan_norms(const MatrixSymbolField& field, const QuadratureRule& grid) {
    std::vector<Expr> roots{field.expr};
    for (int i = 0; i < 4; ++i) roots.push_back(sym::derivative(field.expr, i));
    const Evaluator ev(roots);
    const std::size_t blocks = block_count(grid);
    std::vector<NormScan> part(blocks);
    parallel_for(blocks, [&](std::size_t b) {
        const std::size_t begin = b * kNodeBlock, count = std::min(kNodeBlock, grid.size() - begin);
        const auto vals = evaluate_on_rule(ev, grid, begin, count);
        NormScan s;
        for (std::size_t k = 0; k < count; ++k) {
            s.sup = std::max(s.sup, spectral_norm(matrix_at(vals[0], k)));
            double g2 = 0.0;
            for (int i = 1; i <= 4; ++i) {
                const double d = spectral_norm(matrix_at(vals[i], k));
                g2 += d * d;
            }
            s.grad = std::max(s.grad, std::sqrt(g2));
        }
        part[b] = s;
    });
    NormScan total;
    for (const auto& s : part) {
        total.sup = std::max(total.sup, s.sup);
        total.grad = std::max(total.grad, s.grad);
    }
    return total;
}

}  // namespace

EllipticityReport check_heisenberg_elliptic(const MatrixSymbolField& field, const QuadratureRule& grid, double tol) {
    if (!(tol > 0.0)) throw Error(ErrorKind::InvalidInput, "ellipticity tolerance must be positive");
    require_numeric(field, grid);
    const int n = field.sphere.n;
    EllipticityReport rep;
    rep.tol = tol;
    rep.grid_points = grid.size();
    rep.sup_norm = scan_norms(field, grid).sup;
    // Beyond sup‖γ‖ + 1 every γ(x) − λI is invertible by norm comparison.
    for (int level = n; level <= rep.sup_norm + 1.0; level += 2) {
        rep.thresholds.push_back(-level);
        rep.thresholds.push_back(level);
    }
    std::sort(rep.thresholds.begin(), rep.thresholds.end());
    rep.worst_margin = std::numeric_limits<double>::infinity();
    if (rep.thresholds.empty()) return rep;

    const Evaluator ev(field.expr);
    struct Worst {
        double margin = std::numeric_limits<double>::infinity();
        std::size_t node = 0;
        int lambda = 0;
    };
    const std::size_t blocks = block_count(grid);
    std::vector<Worst> part(blocks);
    parallel_for(blocks, [&](std::size_t b) {
        const std::size_t begin = b * kNodeBlock, count = std::min(kNodeBlock, grid.size() - begin);
        const auto vals = evaluate_on_rule(ev, grid, begin, count);
        Worst w;
        for (std::size_t k = 0; k < count; ++k) {
            const Eigen::MatrixXcd g = matrix_at(vals[0], k);
            for (int lambda : rep.thresholds) {
                const double m = min_singular(g - Eigen::MatrixXcd::Identity(field.r, field.r) * double(lambda));
                if (m < w.margin) w = {m, begin + k, lambda};
            }
        }
        part[b] = w;
    });
    Worst worst;
    for (const auto& w : part)
        if (w.margin < worst.margin) worst = w;
    rep.worst_margin = worst.margin;
    rep.witness = grid.point(worst.node);
    rep.witness_lambda = worst.lambda;
    rep.elliptic = rep.worst_margin > tol;
    return rep;
}

InvertibilityReport check_invertible(const MatrixSymbolField& field, const QuadratureRule& grid) {
    require_numeric(field, grid);
    const Evaluator ev(field.expr);
    const std::size_t blocks = block_count(grid);
    std::vector<double> part(blocks, std::numeric_limits<double>::infinity());
    parallel_for(blocks, [&](std::size_t b) {
        const std::size_t begin = b * kNodeBlock, count = std::min(kNodeBlock, grid.size() - begin);
        const auto vals = evaluate_on_rule(ev, grid, begin, count);
        for (std::size_t k = 0; k < count; ++k) part[b] = std::min(part[b], min_singular(matrix_at(vals[0], k)));
    });
    InvertibilityReport rep;
    rep.min_singular = *std::min_element(part.begin(), part.end());
    rep.slack = grid.spacing * scan_norms(field, grid).grad;
    rep.certified = rep.min_singular > rep.slack;
    return rep;
}

FockModel choose_truncation(const MatrixSymbolField& field, const QuadratureRule& grid, double tol) {
    const EllipticityReport ell = check_heisenberg_elliptic(field, grid, tol);
    if (!ell.elliptic)
        throw Error(ErrorKind::NotElliptic, "symbol is not Heisenberg-elliptic: margin " +
                                                std::to_string(ell.worst_margin) + " at lambda = " +
                                                std::to_string(ell.witness_lambda));
    const NormScan s = scan_norms(field, grid);
    FockModel fm;
    fm.n = field.sphere.n;
    fm.sup_norm_grid = s.sup;
    fm.lipschitz_slack = grid.spacing * s.grad;
    const double bound = fm.sup_norm_grid + fm.lipschitz_slack;
    fm.N = std::max(0, static_cast<int>(std::ceil((bound - fm.n) / 2.0)));
    for (int j = 0; j <= fm.N; ++j) fm.multiplicities.push_back(multiplicity(fm.n, j));
    return fm;
}

}  // namespace hindex
